"""Command-line entry point: ingest datasets, run suites, re-render reports.

Exit codes: 0 all fixtures succeeded, 10 some fixtures failed, 1
configuration or I/O error. `TRAJBENCH_LOG` sets the log level.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys
from pathlib import Path

from . import charts
from .dataset import ingest_manifest, load_manifest
from .errors import TrajbenchError
from .metrics import MetricRecord, read_records
from .suites import SUITES, RunConfig, run_suite

EXIT_OK = 0
EXIT_CONFIG = 1
EXIT_PARTIAL = 10


def _setup_logging() -> None:
    level = os.environ.get("TRAJBENCH_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="trajbench",
        description="Trajectory-aware benchmark harness for machine-learning force fields")
    sub = parser.add_subparsers(dest="command", required=True)

    p_ingest = sub.add_parser("ingest", help="parse and canonicalize a dataset manifest")
    p_ingest.add_argument("--manifest", required=True, type=Path)
    p_ingest.add_argument("--out", required=True, type=Path)

    p_run = sub.add_parser("run", help="run a benchmark suite")
    p_run.add_argument("--suite", required=True, choices=SUITES)
    p_run.add_argument("--data", required=True, type=Path, help="ingested store directory")
    p_run.add_argument("--model", default="builtin",
                       help="'builtin' or cmd:\"<command line>\" for a protocol adapter")
    p_run.add_argument("--out", required=True, type=Path)
    p_run.add_argument("--molecule", default=None,
                       help="molecule id for single-trajectory suites (default: first)")
    p_run.add_argument("--samples", default=None,
                       help="comma-separated sample counts overriding the suite defaults")
    p_run.add_argument("--test-samples", type=int, default=None,
                       help="cap test frames per fixture by even stride")
    p_run.add_argument("--soap-rcut", type=float, default=5.0)
    p_run.add_argument("--soap-sigma", type=float, default=0.5)
    p_run.add_argument("--soap-nmax", type=int, default=8)
    p_run.add_argument("--soap-lmax", type=int, default=6)
    p_run.add_argument("--soap-quadrature", type=int, default=64)
    p_run.add_argument("--ridge-lambda", type=float, default=1e-8)
    p_run.add_argument("--fd-step", type=float, default=1e-3)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.add_argument("--seed", type=int, default=0)
    p_run.add_argument("--train-timeout-s", type=float, default=600.0)
    p_run.add_argument("--predict-timeout-s", type=float, default=300.0)

    p_report = sub.add_parser("report", help="re-render tables and charts from records")
    p_report.add_argument("--records", required=True, type=Path)
    p_report.add_argument("--out", required=True, type=Path)
    return parser


def _cmd_ingest(args) -> int:
    manifest = load_manifest(args.manifest)
    store = ingest_manifest(manifest, args.out)
    for mol_id in sorted(store):
        traj = store[mol_id]
        symbols = sorted({s.symbol for s in traj.frames[0].species})
        print(f"{mol_id}: {len(traj)} frames, {traj.frames[0].n_atoms} atoms, "
              f"species {','.join(symbols)}")
    print(f"store written to {args.out}")
    return EXIT_OK


def _cmd_run(args) -> int:
    samples = None
    if args.samples:
        samples = tuple(int(s) for s in args.samples.split(","))
    config = RunConfig(
        data_dir=args.data, suite=args.suite, out_dir=args.out,
        model_spec=args.model, molecule=args.molecule, samples=samples,
        test_samples=args.test_samples,
        soap_r_cut=args.soap_rcut, soap_sigma=args.soap_sigma,
        soap_n_max=args.soap_nmax, soap_l_max=args.soap_lmax,
        soap_quadrature_order=args.soap_quadrature,
        ridge_lambda=args.ridge_lambda, fd_step=args.fd_step,
        workers=args.workers, seed=args.seed,
        train_timeout_s=args.train_timeout_s,
        predict_timeout_s=args.predict_timeout_s)
    print(f"suite={config.suite} model={config.model_spec} data={config.data_dir}")
    print(f"soap: r_cut={config.soap_r_cut} sigma={config.soap_sigma} "
          f"n_max={config.soap_n_max} l_max={config.soap_l_max} "
          f"quadrature={config.soap_quadrature_order}")
    result = run_suite(config)
    _print_summary(result.records)
    print(f"{result.fixtures_total} fixtures, {result.fixtures_failed} failed; "
          f"outputs in {result.out_dir}")
    if result.fixtures_failed:
        return EXIT_PARTIAL
    return EXIT_OK


def _print_summary(records: list[MetricRecord]) -> None:
    for r in sorted(records, key=lambda r: (r.fixture_id, r.metric, r.test_molecule or "")):
        if r.status != "ok":
            print(f"  {r.fixture_id:<28} ERROR {r.message}")
        elif r.metric in ("force_mae_all", "energy_mae_per_atom", "window_similarity"):
            target = f" -> {r.test_molecule}" if r.test_molecule else ""
            print(f"  {r.fixture_id:<28}{target} {r.metric} = {r.value:.6g} {r.unit}")


def _render_tables(records: list[MetricRecord]) -> str:
    lines = []
    metrics = sorted({r.metric for r in records if r.status == "ok"})
    for metric in metrics:
        recs = sorted((r for r in records if r.status == "ok" and r.metric == metric),
                      key=lambda r: (r.value if r.value is not None else 0.0, r.fixture_id))
        lines.append(f"# {metric}")
        for r in recs:
            target = f" -> {r.test_molecule}" if r.test_molecule else ""
            lines.append(f"{r.fixture_id:<32}{target:<8} {r.value:.8g} {r.unit}")
        lines.append("")
    errors = [r for r in records if r.status != "ok"]
    if errors:
        lines.append("# failures")
        for r in errors:
            lines.append(f"{r.fixture_id:<32} {r.message}")
        lines.append("")
    return "\n".join(lines)


def _cmd_report(args) -> int:
    records = read_records(args.records)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "tables.txt").write_text(_render_tables(records))
    paths = charts.render_records(records, out_dir / "charts")
    print(f"wrote tables.txt and {len(paths)} charts to {out_dir}")
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    _setup_logging()
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "ingest":
            return _cmd_ingest(args)
        if args.command == "run":
            return _cmd_run(args)
        return _cmd_report(args)
    except TrajbenchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
