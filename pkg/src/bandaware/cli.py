"""Command-line entry point.

Exit codes: 0 success, 1 usage error, 2 input/parse error, 3 computation
error. Every failure prints one diagnostic line on stderr and leaves no
output files behind.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

from . import banding, fusion, harness, media, subjective
from .errors import BandawareError, ComputationError, InputError, UsageError

log = logging.getLogger("bandaware")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _positive_int(text):
    try:
        n = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if n <= 0:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {n}")
    return n


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="bandaware", description="Banding index, VMAF_BA fusion and evaluation tools")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("score", help="banding index of decoded video")
    s.add_argument("--input", nargs="+", required=True, type=Path)
    s.add_argument("--raw", action="store_true", help="headerless planar YUV input")
    s.add_argument("--width", type=_positive_int)
    s.add_argument("--height", type=_positive_int)
    s.add_argument("--bitdepth", type=int, choices=(8, 10), default=8)
    s.add_argument("--chroma", choices=sorted(media.CHROMA_FORMATS), default="420")
    s.add_argument("--json", type=Path, help="per-frame report (single input only)")
    s.add_argument("--csv", type=Path, help="item_id,<column> rows, one per input")
    s.add_argument("--column", default="cambi", help="column name used in --csv output")
    s.add_argument("--scales", type=_positive_int, default=banding.BandingParams.num_scales)
    s.add_argument("--window", type=_positive_int, default=banding.BandingParams.window)
    s.add_argument("--gain", type=float, default=banding.BandingParams.output_gain)
    s.add_argument("--jobs", type=_positive_int, default=1)
    s.add_argument("--figures", type=Path, help="directory for per-input timeline plots")

    f = sub.add_parser("fuse", help="add a VMAF_BA column to a manifest")
    f.add_argument("--manifest", required=True, type=Path)
    f.add_argument("--out", required=True, type=Path)
    f.add_argument("--alpha", type=float, default=fusion.DEFAULT_ALPHA)
    f.add_argument("--banding", type=Path, help="CSV from `score --csv` to merge by item_id")
    f.add_argument("--vmaf-column", default="vmaf")
    f.add_argument("--banding-column", default="cambi")
    f.add_argument("--out-column", default="vmaf_ba")

    c = sub.add_parser("calibrate", help="grid-search alpha for maximum SROCC")
    c.add_argument("--manifest", required=True, type=Path)
    c.add_argument("--out", required=True, type=Path)
    c.add_argument("--lo", type=float, default=0.0)
    c.add_argument("--hi", type=float, default=2.0)
    c.add_argument("--step", type=float, default=0.01)
    c.add_argument("--vmaf-column", default="vmaf")
    c.add_argument("--banding-column", default="cambi")
    c.add_argument("--figures", type=Path)

    e = sub.add_parser("evaluate", help="PLCC / SROCC / AUC_BW report")
    e.add_argument("--manifest", required=True, type=Path)
    e.add_argument("--metrics", required=True, help="comma-separated metric columns")
    e.add_argument("--out", required=True, type=Path)
    e.add_argument("--format", choices=("json", "csv"),
                   help="defaults to the --out suffix, else json")
    e.add_argument("--figures", type=Path, help="directory for metric-vs-MOS scatter plots")

    m = sub.add_parser("mos", help="recover MOS from raw opinion scores")
    m.add_argument("--scores", required=True, type=Path)
    m.add_argument("--out", required=True, type=Path)
    m.add_argument("--method", choices=("mle", "plain"), default="mle")
    m.add_argument("--subjects-out", type=Path, help="per-subject bias/inconsistency (mle only)")
    m.add_argument("--tol", type=float, default=1e-9)
    m.add_argument("--max-iter", type=_positive_int, default=10000)

    r = sub.add_parser("reliability", help="rank flips between two MOS tables")
    r.add_argument("--a", required=True, type=Path)
    r.add_argument("--b", required=True, type=Path)
    r.add_argument("--out", required=True, type=Path)
    return p


def _check_inputs(*paths):
    for path in paths:
        if path is not None and not path.is_file():
            raise InputError(f"no such file: {path}")


def _write_all(outputs: dict) -> None:
    """Write every text output; anything already written is removed on failure."""
    done = []
    try:
        for path, text in outputs.items():
            with open(path, "w", newline="") as fh:
                fh.write(text)
            done.append(path)
    except OSError as exc:
        for path in done:
            Path(path).unlink(missing_ok=True)
        raise InputError(f"cannot write {path}: {exc.strerror}") from None


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _figure_dir(path):
    if path is None:
        return None
    path.mkdir(parents=True, exist_ok=True)
    return path


# ---- subcommands ---------------------------------------------------------------

def cmd_score(args):
    if args.raw and (args.width is None or args.height is None):
        raise UsageError("--raw requires --width and --height")
    if not args.raw and (args.width or args.height):
        raise UsageError("--width/--height only apply with --raw")
    if args.json and len(args.input) != 1:
        raise UsageError("--json takes a single --input; use --csv for several")
    params = banding.BandingParams(num_scales=args.scales, window=args.window, output_gain=args.gain)
    _check_inputs(*args.input)

    reports = []
    for path in args.input:
        seq = media.load_sequence(path, raw=args.raw, width=args.width, height=args.height,
                                  bit_depth=args.bitdepth, chroma_format=args.chroma)
        reports.append(banding.sequence_banding_index(seq, params, workers=args.jobs))

    outputs = {}
    if args.json:
        outputs[args.json] = _dumps(reports[0].to_dict())
    if args.csv:
        lines = [f"item_id,{args.column}"]
        lines += [f"{p.stem},{r.pooled:.6f}" for p, r in zip(args.input, reports)]
        outputs[args.csv] = "\n".join(lines) + "\n"
    _write_all(outputs)
    if not outputs:
        if len(reports) == 1:
            sys.stdout.write(_dumps(reports[0].to_dict()))
        else:
            sys.stdout.write(_dumps({p.stem: r.pooled for p, r in zip(args.input, reports)}))
    if (fig_dir := _figure_dir(args.figures)) is not None:
        from . import plotting
        for p, r in zip(args.input, reports):
            plotting.banding_timeline(r, fig_dir / f"{p.stem}_banding.png", title=p.stem)


def _merge_banding(manifest, path, column):
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if "item_id" not in (reader.fieldnames or ()) or column not in reader.fieldnames:
            raise InputError(f"{path}: expected columns item_id and {column}")
        values = {}
        for ln, row in enumerate(reader, start=2):
            try:
                values[row["item_id"].strip()] = float(row[column])
            except ValueError:
                raise InputError(f"{path}:{ln}: non-numeric {column} value {row[column]!r}") from None
    merged = [values.get(it.item_id) for it in manifest.items]
    missing = [it.item_id for it, v in zip(manifest.items, merged) if v is None]
    if missing:
        raise InputError(f"{path}: no {column} value for item {missing[0]!r}")
    return manifest.with_metric(column, merged)


def cmd_fuse(args):
    params = fusion.FusionParams(alpha=args.alpha)
    _check_inputs(args.manifest, args.banding)
    manifest = harness.load_manifest(args.manifest)
    if args.banding:
        manifest = _merge_banding(manifest, args.banding, args.banding_column)
    fused = fusion.fuse_dataset(manifest, params, args.vmaf_column, args.banding_column,
                                args.out_column)
    _write_all({args.out: harness.format_manifest(fused)})


def cmd_calibrate(args):
    _check_inputs(args.manifest)
    manifest = harness.load_manifest(args.manifest)
    result = fusion.calibrate_alpha(manifest, args.lo, args.hi, args.step,
                                    args.vmaf_column, args.banding_column)
    _write_all({args.out: _dumps(result.to_dict())})
    if (fig_dir := _figure_dir(args.figures)) is not None:
        from . import plotting
        plotting.calibration_curve(result, fig_dir / f"{manifest.name}_calibration.png")


def cmd_evaluate(args):
    names = [n.strip() for n in args.metrics.split(",") if n.strip()]
    if not names:
        raise UsageError("--metrics is empty")
    fmt = args.format or ("csv" if args.out.suffix.lower() == ".csv" else "json")
    _check_inputs(args.manifest)
    manifest = harness.load_manifest(args.manifest)
    report = harness.evaluate(manifest, names)
    for m in report.metrics:
        if m.error:
            log.warning("%s: %s", m.name, m.error)
    _write_all({args.out: harness.format_report(report, fmt)})
    if (fig_dir := _figure_dir(args.figures)) is not None:
        from . import plotting
        for name in names:
            plotting.metric_scatter(manifest, name, fig_dir / f"{manifest.name}_{name}.png")


def cmd_mos(args):
    if args.subjects_out and args.method != "mle":
        raise UsageError("--subjects-out requires --method mle")
    _check_inputs(args.scores)
    matrix = subjective.read_scores_csv(args.scores)
    outputs = {}
    if args.method == "plain":
        outputs[args.out] = subjective.format_mos_csv(subjective.plain_mos(matrix))
    else:
        est = subjective.solve_mle(matrix, tol=args.tol, max_iter=args.max_iter)
        if not est.converged:
            raise ComputationError(f"MLE did not converge within {est.iterations} iterations")
        outputs[args.out] = subjective.format_mos_csv(est.table())
        if args.subjects_out:
            outputs[args.subjects_out] = subjective.format_subjects_csv(est)
    _write_all(outputs)


def cmd_reliability(args):
    _check_inputs(args.a, args.b)
    report = subjective.reliability_compare(subjective.read_mos_csv(args.a),
                                            subjective.read_mos_csv(args.b))
    _write_all({args.out: _dumps(report.to_dict())})


COMMANDS = {
    "score": cmd_score,
    "fuse": cmd_fuse,
    "calibrate": cmd_calibrate,
    "evaluate": cmd_evaluate,
    "mos": cmd_mos,
    "reliability": cmd_reliability,
}


def run(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                            format="%(name)s: %(message)s")
        COMMANDS[args.command](args)
    except BandawareError as exc:
        print(f"bandaware: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"bandaware: error: {exc}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(run())
