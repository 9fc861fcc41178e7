"""Command-line harness: ``lctcq {fit,bench,oracle,stats}``.

Exit codes: 0 success, 1 verification failure, 2 configuration error,
3 I/O error.
"""

from __future__ import annotations

import argparse
import datetime
import json
import sys

from lctcq import config as cfgmod
from lctcq import experiments as ex
from lctcq.errors import ConfigError, FitError, SearchSizeError
from lctcq.rate_estimator import FitReport
from lctcq.report import (
    BENCH_COLUMNS,
    FIT_COLUMNS,
    HISTOGRAM_COLUMNS,
    STATS_COLUMNS,
    ExperimentReport,
    ReportIOError,
    emit_report,
    fit_rows,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3


def _common() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON config document")
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir", default="out")
    p.add_argument("--reproducible", action="store_true",
                   help="omit timestamps and wall-clock columns")
    p.add_argument("--rate-mode", choices=["surrogate", "linear"])
    p.add_argument("--k-factor", type=float)
    p.add_argument("--k-mode", choices=list(cfgmod.K_MODES))
    p.add_argument("--prune", choices=["on", "off"])
    p.add_argument("--rice-g", type=int)
    p.add_argument("--phi", type=float)
    p.add_argument("--blocks-per-cell", type=int)
    p.add_argument("--qp", type=int, nargs="+", dest="qp_list")
    p.add_argument("--params", dest="params_file", help="fit report JSON to load parameters from")
    return p


def build_parser() -> argparse.ArgumentParser:
    common = _common()
    parser = argparse.ArgumentParser(prog="lctcq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)
    sub.add_parser("fit", parents=[common], help="fit the block rate model per QP")
    sub.add_parser("bench", parents=[common], help="full vs accelerated trellis sweep")
    o = sub.add_parser("oracle", parents=[common], help="trellis vs exhaustive search")
    o.add_argument("--self-test-corrupt", action="store_true", help=argparse.SUPPRESS)
    sub.add_parser("stats", parents=[common], help="closed-form statistics table")
    return parser


def _overrides(args) -> dict:
    ov = {
        "seed": args.seed,
        "rate_mode": args.rate_mode,
        "k_factor": args.k_factor,
        "k_mode": args.k_mode,
        "rice_g": args.rice_g,
        "phi": args.phi,
        "blocks_per_cell": args.blocks_per_cell,
        "qp_list": args.qp_list,
        "params_file": args.params_file,
    }
    if args.prune is not None:
        ov["pruning"] = args.prune == "on"
    return ov


def _stamp(args):
    if args.reproducible:
        return None
    return datetime.datetime.now(datetime.timezone.utc).isoformat()


def load_fits(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: not a fit report ({exc})") from exc
    fits = doc.get("fit") if isinstance(doc, dict) else None
    if not fits:
        raise ConfigError(f"{path}: no fit section")
    return {qp: FitReport.from_dict(rep) for qp, rep in fits.items()}


def cmd_fit(cfg, args) -> int:
    fits = ex.run_fit(cfg)
    report = ExperimentReport(
        "fit", cfg.to_dict(), fit={qp: rep.to_dict() for qp, rep in fits.items()},
        generated_at=_stamp(args),
    )
    for path in emit_report(report, args.out_dir, "fit", {"": (fit_rows(fits), FIT_COLUMNS)}):
        print(path)
    for qp, rep in fits.items():
        p = rep.params
        print(f"QP {qp}: alpha={p.alpha:.4f} beta={p.beta:.4f} gamma={p.gamma:.4f} "
              f"eps={p.epsilon:.4f} R2={rep.r_squared:.4f}")
    return EXIT_OK


def cmd_bench(cfg, args) -> int:
    fits = load_fits(cfg.params_file) if cfg.params_file else None
    rows, hists, fits = ex.run_bench(cfg, fits, timing=not args.reproducible)
    report = ExperimentReport(
        "bench", cfg.to_dict(), cells=rows,
        fit=None if fits is None else {qp: rep.to_dict() for qp, rep in fits.items()},
        histograms=hists, generated_at=_stamp(args),
    )
    tables = {"": (rows, BENCH_COLUMNS), "_lastpos": (hists, HISTOGRAM_COLUMNS)}
    for path in emit_report(report, args.out_dir, "bench", tables):
        print(path)
    for r in rows:
        print(f"QP {r['qp']} sigma {r['sigma']:g} {r['width']}x{r['height']}: "
              f"cost delta {100 * r['rel_cost_delta']:+.3f}%  "
              f"branch savings {100 * r['savings_branches']:.1f}%")
    return EXIT_OK


def cmd_oracle(cfg, args) -> int:
    summary = ex.run_oracle(cfg, corrupt=args.self_test_corrupt)
    report = ExperimentReport(
        "oracle", cfg.to_dict(),
        summary={"draws": summary.draws, "failures": summary.failures,
                 "max_rel_error": summary.max_rel_error,
                 "counterexample": summary.counterexample},
        generated_at=_stamp(args),
    )
    emit_report(report, args.out_dir, "oracle", {})
    if summary.passed:
        print(f"PASS: {summary.draws} draws, max relative cost error {summary.max_rel_error:.3g}")
        return EXIT_OK
    print(f"FAIL: {summary.failures} of {summary.draws} draws disagree with the exhaustive search")
    print("first counterexample:")
    print(json.dumps(summary.counterexample))
    return EXIT_VERIFY


def cmd_stats(cfg, args) -> int:
    rows = ex.run_stats(cfg)
    bad = [r for r in rows if not r["max_rel_err"] <= ex.STATS_TOLERANCE]
    report = ExperimentReport(
        "stats", cfg.to_dict(), cells=rows,
        summary={"rows": len(rows), "mismatches": len(bad)}, generated_at=_stamp(args),
    )
    for path in emit_report(report, args.out_dir, "stats", {"": (rows, STATS_COLUMNS)}):
        print(path)
    if bad:
        for r in bad:
            print(f"closed form disagrees with quadrature at sigma={r['sigma']}, qp={r['qp']}: "
                  f"relative error {r['max_rel_err']:.3g}")
        return EXIT_VERIFY
    return EXIT_OK


COMMANDS = {"fit": cmd_fit, "bench": cmd_bench, "oracle": cmd_oracle, "stats": cmd_stats}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config, _overrides(args))
        return COMMANDS[args.verb](cfg, args)
    except (ConfigError, FitError, SearchSizeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ReportIOError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
