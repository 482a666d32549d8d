"""Command-line entry point: simulate, analyze, persistence, counterexample, ablation."""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import counterexample as ce
from .anomaly import saturate
from .simulator.batch import SimConfig, apply_seed_override, run_batch
from .simulator.io import LogSchemaError, format_json, format_log, read_log, read_metrics
from .simulator.manifest import ManifestError, ablation_manifest, default_manifest, format_manifest, read_manifest
from .simulator.profiles import ConfigurationError
from .simulator.tables import (
    format_table,
    render_text,
    statistics_report,
    table_ablation,
    table_recovery,
    table_trackers,
)
from .topology import TopologyError, build_rips, persistence, total_persistence

EXIT_OK, EXIT_PARTIAL, EXIT_CONFIG = 0, 1, 2
OUTPUT_ENV = "IKKA_OUTPUT_DIR"
DEFAULT_OUTPUT = "artefacts"
log = logging.getLogger("ikka")


class CliError(Exception):
    """Configuration problem that maps to exit status 2."""


def _output_dir(args) -> Path:
    out = Path(args.output or os.environ.get(OUTPUT_ENV) or DEFAULT_OUTPUT)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError(f"cannot create output directory {out}: {exc}") from None
    if not os.access(out, os.W_OK):
        raise CliError(f"output directory {out} is not writable")
    return out


def _config(args) -> SimConfig:
    if not getattr(args, "config", None):
        return SimConfig()
    try:
        return SimConfig.from_json(args.config)
    except ConfigurationError as exc:
        raise CliError(str(exc)) from None


def _manifest(args, fallback):
    """Entries and row errors; ``default`` or an omitted path selects the built-in batch."""
    if args.manifest in (None, "default"):
        return fallback(), []
    try:
        return read_manifest(args.manifest)
    except (OSError, ManifestError) as exc:
        raise CliError(f"cannot read manifest {args.manifest}: {exc}") from None


def _simulate(args, fallback) -> int:
    config = _config(args)
    entries, errors = _manifest(args, fallback)
    entries = apply_seed_override(entries, args.seed)
    out = _output_dir(args)
    (out / "logs").mkdir(exist_ok=True)
    (out / "metrics").mkdir(exist_ok=True)
    (out / "manifest.csv").write_text(format_manifest(entries))
    results = run_batch(entries, config, workers=args.workers)
    failures = [{"row": e.row, "error": str(e)} for e in errors]
    for r in results:
        if r.ok:
            (out / "logs" / f"{r.entry.run_id}.csv").write_text(format_log(r.log))
            (out / "metrics" / f"{r.entry.run_id}.json").write_text(format_json(r.metrics.to_dict()))
        else:
            failures.append({"run_id": r.entry.run_id, "error": r.error})
    summary = {
        "runs_requested": len(entries) + len(errors),
        "runs_completed": sum(r.ok for r in results),
        "errors": failures,
        "config": config.to_dict(),
    }
    (out / "batch_summary.json").write_text(format_json(summary))
    for f in failures:
        log.error("%s", f)
    log.info("completed %d of %d runs into %s", summary["runs_completed"], summary["runs_requested"], out)
    return EXIT_OK if not failures else EXIT_PARTIAL


def cmd_simulate(args) -> int:
    return _simulate(args, default_manifest)


def cmd_ablation(args) -> int:
    return _simulate(args, lambda: ablation_manifest(args.runs_per_arm))


def _metric_files(root: Path) -> list:
    sub = root / "metrics"
    base = sub if sub.is_dir() else root
    return sorted(base.glob("*.json"))


def cmd_analyze(args) -> int:
    root = Path(args.input)
    if not root.is_dir():
        raise CliError(f"input directory {root} does not exist")
    files = _metric_files(root)
    if not files:
        raise CliError(f"no metric files in {root}")
    wanted = None
    if args.manifest:
        entries, _ = _manifest(args, default_manifest)
        wanted = {e.run_id for e in entries}
    metrics, bad = [], []
    for f in files:
        try:
            m = read_metrics(f)
        except (OSError, ValueError) as exc:
            bad.append({"file": f.name, "error": str(exc)})
            continue
        if wanted is None or m.run_id in wanted:
            metrics.append(m)
    if not metrics:
        raise CliError("no readable metric files")
    metrics.sort(key=lambda m: m.run_id)
    out = _output_dir(args)
    tables = {
        "table_trackers": table_trackers(metrics),
        "table_recovery": table_recovery(metrics),
        "table_ablation": table_ablation(metrics),
    }
    for name, rows in tables.items():
        (out / f"{name}.csv").write_text(format_table(rows))
        (out / f"{name}.json").write_text(format_json(rows))
    report = statistics_report(metrics)
    report["excluded_files"] = bad
    (out / "stats_report.json").write_text(format_json(report))
    text = io.StringIO()
    for name, rows in tables.items():
        text.write(f"## {name}\n{render_text(rows)}\n")
    kw = report["kruskal_wallis"]
    if kw:
        text.write(f"Kruskal-Wallis H({kw['df']}) = {kw['H']:.3f}, p = {kw['p']:.3g}\n")
    for p in report["pairwise"]:
        text.write(f"{p['a']} vs {p['b']}: delta = {p['cliffs_delta']:+.3f} ({p['magnitude']}), "
                   f"p_holm = {p['p_holm']:.3g}\n")
    (out / "report.txt").write_text(text.getvalue())
    if args.verbose:
        sys.stdout.write(text.getvalue())
    for b in bad:
        log.error("excluded %s", b)
    return EXIT_OK if not bad else EXIT_PARTIAL


def cmd_persistence(args) -> int:
    try:
        rows = read_log(args.input, required=("t", "e_meas"))
    except OSError as exc:
        raise CliError(f"cannot read log {args.input}: {exc}") from None
    except LogSchemaError as exc:
        log.error("schema error: %s", exc)
        return EXIT_CONFIG
    if not rows:
        log.error("log %s has no rows", args.input)
        return EXIT_CONFIG
    pts = np.array([(r["t"], abs(r["e_meas"])) for r in rows])
    try:
        filt = build_rips(pts, args.max_radius)
    except TopologyError as exc:
        raise CliError(str(exc)) from None
    diagrams = [persistence(filt, 0, validate=False), persistence(filt, 1, validate=False)]
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("degree", "birth", "death"))
    for pd in diagrams:
        for b, d in pd.pairs:
            w.writerow((pd.degree, f"{b:.6f}", f"{d:.6f}"))
    out = _output_dir(args)
    stem = Path(args.input).stem
    (out / f"{stem}_diagram.csv").write_text(buf.getvalue())
    raw = total_persistence(diagrams[1])
    summary = {
        "input": Path(args.input).name,
        "points": len(pts),
        "max_radius": args.max_radius,
        "half_saturation": args.half_saturation,
        "h0_pairs": len(diagrams[0].pairs),
        "h1_pairs": len(diagrams[1].pairs),
        "M_raw": raw,
        "M": saturate(raw, args.half_saturation),
    }
    (out / f"{stem}_persistence.json").write_text(format_json(summary))
    if args.verbose:
        sys.stdout.write(format_json(summary))
    return EXIT_OK


def _points_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.6f}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def _matrix_csv(m: np.ndarray) -> str:
    return "".join(",".join(f"{v:.6f}" for v in row) + "\n" for row in m)


def cmd_counterexample(args) -> int:
    seed = 0 if args.seed is None else args.seed
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text()).get("counterexample", {})
        except (OSError, json.JSONDecodeError, AttributeError) as exc:
            raise CliError(f"cannot read configuration {args.config}: {exc}") from None
        seed = raw.get("seed", seed) if args.seed is None else seed
        args.n_per_class = raw.get("n_per_class", args.n_per_class)
        args.box_c = raw.get("box_c", args.box_c)
    try:
        res = ce.run_counterexample(args.n_per_class, seed, args.box_c)
    except ce.PreconditionError as exc:
        raise CliError(str(exc)) from None
    except ce.SolverError as exc:
        log.error("%s", exc)
        return EXIT_PARTIAL
    out = _output_dir(args)
    data, model, grid = res["data"], res["model"], res["grid"]
    (out / "data.csv").write_text(_points_csv(
        ("x", "y", "label"), [(float(x), float(y), int(c)) for (x, y), c in zip(data.points, data.labels)]))
    (out / "support_vectors.csv").write_text(_points_csv(
        ("x", "y", "label"),
        [(float(data.points[i, 0]), float(data.points[i, 1]), int(data.labels[i])) for i in model.support_indices]))
    (out / "top5.csv").write_text(_points_csv(("x", "y"), [(float(a), float(b)) for a, b in grid.top5]))
    (out / "w_grid.csv").write_text(_matrix_csv(grid.W))
    summary = dict(res["summary"])
    summary["reference"] = {"maverick_distance": 0.13, "sv_mean_distance": 1.32}
    summary["grid"] = {"x_range": list(grid.grid.x_range), "y_range": list(grid.grid.y_range),
                       "resolution": grid.grid.resolution}
    (out / "summary.json").write_text(format_json(summary))
    if args.verbose:
        sys.stdout.write(format_json(summary))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ikka", description=__doc__)
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", help=f"output directory (default ${OUTPUT_ENV} or ./{DEFAULT_OUTPUT})")
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--seed", type=int, help="override seeds (run i gets seed + i)")
    common.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    for name, fn, help_ in (("simulate", cmd_simulate, "run a manifest of simulated runs"),
                            ("ablation", cmd_ablation, "simulate the ablation arms")):
        s = sub.add_parser(name, parents=[common], help=help_)
        s.add_argument("--manifest", help="manifest CSV, or 'default' for the built-in batch")
        s.add_argument("--workers", type=int, default=1)
        if name == "ablation":
            s.add_argument("--runs-per-arm", type=int, default=30)
        s.set_defaults(func=fn)

    s = sub.add_parser("analyze", parents=[common], help="aggregate metrics into tables and statistics")
    s.add_argument("--input", required=True, help="directory holding metric JSON files")
    s.add_argument("--manifest", help="restrict the analysis to this manifest's runs")
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("persistence", parents=[common], help="persistence diagrams of a run log")
    s.add_argument("--input", required=True, help="run-log CSV")
    s.add_argument("--max-radius", type=float, default=0.3)
    s.add_argument("--half-saturation", type=float, default=0.1)
    s.set_defaults(func=cmd_persistence)

    s = sub.add_parser("counterexample", parents=[common], help="three-class SVM counterexample")
    s.add_argument("--n-per-class", type=int, default=60)
    s.add_argument("--box-c", type=float, default=1.0)
    s.set_defaults(func=cmd_counterexample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
