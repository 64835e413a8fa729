"""Dataset manifests, metric evaluation and report serialization.

A manifest is a CSV with ``item_id``, ``source_id``, ``mos``, an optional
``ci95`` column, and any number of metric columns (empty cell = null).
Metric scores such as VMAF are ingested from external tools, never computed
here.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import stats
from .errors import ComputationError, InputError, UsageError

REQUIRED = ("item_id", "source_id", "mos")
DECIMALS = 6


@dataclass(frozen=True)
class ManifestItem:
    item_id: str
    source_id: str
    mos: float
    ci95: Optional[float] = None
    metrics: dict = field(default_factory=dict)


@dataclass(frozen=True)
class DatasetManifest:
    items: tuple
    metric_names: tuple
    name: str = "dataset"
    has_ci95: bool = False

    def __post_init__(self):
        object.__setattr__(self, "items", tuple(self.items))
        object.__setattr__(self, "metric_names", tuple(self.metric_names))
        seen = set()
        for it in self.items:
            if it.item_id in seen:
                raise InputError(f"duplicate item_id {it.item_id!r}")
            seen.add(it.item_id)
            if set(it.metrics) != set(self.metric_names):
                raise InputError(f"item {it.item_id!r} does not declare every metric column")

    def __len__(self):
        return len(self.items)

    def column(self, name: str) -> np.ndarray:
        """Values of a metric (or ``mos``/``ci95``) as floats; null -> NaN."""
        if name == "mos":
            return np.array([it.mos for it in self.items], dtype=float)
        if name == "ci95":
            return np.array([np.nan if it.ci95 is None else it.ci95 for it in self.items], dtype=float)
        if name not in self.metric_names:
            raise UsageError(f"unknown metric {name!r}")
        return np.array([np.nan if it.metrics[name] is None else it.metrics[name]
                         for it in self.items], dtype=float)

    def with_metric(self, name: str, values) -> "DatasetManifest":
        """Copy with a metric column added (or replaced), appended last."""
        values = list(values)
        if len(values) != len(self.items):
            raise InputError("column length does not match the manifest")
        items = tuple(
            replace(it, metrics={**it.metrics, name: None if v is None or math.isnan(v) else float(v)})
            for it, v in zip(self.items, values)
        )
        names = self.metric_names if name in self.metric_names else self.metric_names + (name,)
        return DatasetManifest(items, names, self.name, self.has_ci95)


def _cell(raw: str, where: str) -> Optional[float]:
    raw = raw.strip()
    if raw == "" or raw.lower() in ("null", "nan", "na"):
        return None
    try:
        v = float(raw)
    except ValueError:
        raise InputError(f"non-numeric cell {raw!r} at {where}") from None
    if not math.isfinite(v):
        raise InputError(f"non-finite cell {raw!r} at {where}")
    return v


def parse_manifest(text: str, name: str = "dataset", source: str = "<manifest>") -> DatasetManifest:
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    missing = [h for h in REQUIRED if h not in header]
    if missing:
        raise InputError(f"{source}: missing required header(s) {', '.join(missing)}")
    if len(set(header)) != len(header):
        raise InputError(f"{source}: duplicate column names")
    reader.fieldnames = header
    metrics = tuple(h for h in header if h not in REQUIRED and h != "ci95")
    has_ci = "ci95" in header
    items, seen = [], set()
    for ln, row in enumerate(reader, start=2):
        where = f"{source}:{ln}"
        if None in row:
            raise InputError(f"{where}: too many cells")
        iid = (row["item_id"] or "").strip()
        if not iid:
            raise InputError(f"{where}: empty item_id")
        if iid in seen:
            raise InputError(f"{where}: duplicate item_id {iid!r}")
        seen.add(iid)
        mos = _cell(row["mos"] or "", where)
        if mos is None:
            raise InputError(f"{where}: mos is required")
        ci = _cell(row["ci95"] or "", where) if has_ci else None
        if ci is not None and ci < 0:
            raise InputError(f"{where}: negative ci95")
        items.append(ManifestItem(
            item_id=iid,
            source_id=(row["source_id"] or "").strip(),
            mos=mos,
            ci95=ci,
            metrics={m: _cell(row[m] or "", where) for m in metrics},
        ))
    return DatasetManifest(tuple(items), metrics, name, has_ci)


def load_manifest(path) -> DatasetManifest:
    from pathlib import Path

    p = Path(path)
    try:
        text = p.read_text()
    except OSError as exc:
        raise InputError(f"cannot read manifest {p}: {exc.strerror}") from None
    return parse_manifest(text, name=p.stem, source=str(p))


def _num(v: Optional[float]) -> str:
    return "" if v is None else repr(float(v))


def format_manifest(manifest: DatasetManifest) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(REQUIRED) + (["ci95"] if manifest.has_ci95 else []) + list(manifest.metric_names)
    w.writerow(header)
    for it in manifest.items:
        row = [it.item_id, it.source_id, _num(it.mos)]
        if manifest.has_ci95:
            row.append(_num(it.ci95))
        row += [_num(it.metrics[m]) for m in manifest.metric_names]
        w.writerow(row)
    return buf.getvalue()


# ---- evaluation ------------------------------------------------------------

@dataclass(frozen=True)
class MetricResult:
    name: str
    n_items: int
    n_excluded: int = 0
    plcc: Optional[float] = None
    srocc: Optional[float] = None
    auc_bw: Optional[float] = None
    n_significant_pairs: int = 0
    error: Optional[str] = None


@dataclass(frozen=True)
class EvalReport:
    dataset: str
    metrics: tuple = ()

    def result(self, name: str) -> MetricResult:
        for m in self.metrics:
            if m.name == name:
                return m
        raise KeyError(name)


def evaluate(manifest: DatasetManifest, metric_names) -> EvalReport:
    """PLCC, SROCC and (when ci95 is available) AUC_BW for each metric.

    Items with a null metric value are dropped for that metric only. A metric
    whose statistics are undefined is reported with an ``error`` instead of
    aborting the whole report.
    """
    metric_names = list(metric_names)
    for name in metric_names:
        if name not in manifest.metric_names:
            raise UsageError(f"unknown metric {name!r}")
    mos_all = manifest.column("mos")
    ci_all = manifest.column("ci95")
    results = []
    for name in metric_names:
        values = manifest.column(name)
        keep = ~np.isnan(values)
        n = int(keep.sum())
        base = dict(name=name, n_items=n, n_excluded=int(values.size - n))
        mos, metric = mos_all[keep], values[keep]
        try:
            if n < 2:
                raise stats.UndefinedStatistic("fewer than two scored items")
            r_p = stats.plcc(metric, mos)
            r_s = stats.srocc(metric, mos)
        except ComputationError as exc:
            results.append(MetricResult(**base, error=str(exc)))
            continue
        auc, n_pairs = None, 0
        ci = ci_all[keep]
        if manifest.has_ci95 and not np.any(np.isnan(ci)):
            pairs = stats.significant_pairs(mos, ci)
            n_pairs = len(pairs)
            if pairs:
                auc = stats.auc_bw(stats.ScoredItems(mos, metric, ci), pairs)
        results.append(MetricResult(**base, plcc=r_p, srocc=r_s, auc_bw=auc,
                                    n_significant_pairs=n_pairs))
    return EvalReport(manifest.name, tuple(results))


# ---- report serialization ----------------------------------------------------

_FIELDS = ("name", "plcc", "srocc", "auc_bw", "n_items", "n_significant_pairs", "n_excluded", "error")


def _round(v):
    return round(float(v), DECIMALS) if isinstance(v, float) else v


def report_to_dict(report: EvalReport) -> dict:
    metrics = []
    for m in report.metrics:
        rec = {}
        for f in _FIELDS:
            v = getattr(m, f)
            if v is None:
                continue
            rec[f] = _round(v)
        metrics.append(rec)
    return {"dataset": report.dataset, "metrics": metrics}


def report_from_dict(d: dict) -> EvalReport:
    try:
        metrics = tuple(
            MetricResult(**{f: rec[f] for f in _FIELDS if f in rec}) for rec in d["metrics"]
        )
        return EvalReport(d["dataset"], metrics)
    except (KeyError, TypeError) as exc:
        raise InputError(f"malformed report: {exc}") from None


def format_report(report: EvalReport, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(report_to_dict(report), indent=2) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(_FIELDS)
        for rec in report_to_dict(report)["metrics"]:
            w.writerow(["" if rec.get(f) is None else (
                f"{rec[f]:.{DECIMALS}f}" if isinstance(rec[f], float) else rec[f]) for f in _FIELDS])
        return buf.getvalue()
    raise UsageError(f"unknown report format {fmt!r}")


def write_report(report: EvalReport, path, fmt: str = "json") -> None:
    text = format_report(report, fmt)
    try:
        with open(path, "w", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise InputError(f"cannot write report to {path}: {exc.strerror}") from None


def read_report(path) -> EvalReport:
    with open(path) as fh:
        return report_from_dict(json.load(fh))
