import json
from pathlib import Path

import pytest

HERE = Path(__file__).parent


@pytest.fixture(scope="session")
def report_schema():
    return json.loads((HERE / "report_schema.json").read_text())
