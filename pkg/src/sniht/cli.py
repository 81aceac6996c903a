"""Command-line interface.

Subcommands::

    sniht recover  --y Y.csv --phi Phi.csv -K 8 --norm 1,1 -o out/
    sniht simulate configs/table1.cfg -o results/table1
    sniht doa      configs/doa.cfg -o results/doa
    sniht oracle   configs/oracle.cfg -o results/oracle
    sniht selftest

Exit codes: 0 success, 1 usage or config error, 2 the solver hit its
iteration cap (``recover`` only).
"""
from __future__ import annotations

import argparse
import csv
import logging
import subprocess
import sys
from dataclasses import fields, is_dataclass
from pathlib import Path

from . import __version__
from .config import ConfigError, load_config
from .core import (
    MixedNormIndex,
    UnsupportedNormError,
    format_support,
    read_complex_csv,
    write_complex_csv,
)
from .doa import method_label, run_doa, write_histogram_csv, write_per_csv
from .experiments import (
    oracle_agreement,
    run_oracle_comparison,
    run_sweep,
    write_results_csv,
)
from .solver import SolverConfig, sniht_solve

log = logging.getLogger("sniht")

EXIT_OK, EXIT_USAGE, EXIT_NOT_CONVERGED = 0, 1, 2


class UsageError(Exception):
    pass


def _git_version():
    try:
        out = subprocess.run(
            ["git", "rev-parse", "--short", "HEAD"],
            cwd=Path(__file__).resolve().parent,
            capture_output=True, text=True, timeout=5,
        )
    except (OSError, subprocess.SubprocessError):
        return "unknown"
    return out.stdout.strip() if out.returncode == 0 and out.stdout.strip() else "unknown"


def _describe(obj, prefix=""):
    lines = []
    for f in fields(obj):
        v = getattr(obj, f.name)
        if is_dataclass(v):
            lines.extend(_describe(v, prefix=f"{prefix}{f.name}."))
        elif isinstance(v, tuple):
            lines.append(f"{prefix}{f.name} = {' '.join(str(x) for x in v)}")
        else:
            lines.append(f"{prefix}{f.name} = {v}")
    return lines


def write_manifest(out_dir, command, config_path, cfg, outputs):
    """Record everything needed to regenerate ``outputs``: tool version,
    effective settings (seed included) and the verbatim config file."""
    text = Path(config_path).read_text()
    lines = [
        f"tool = sniht {__version__}",
        f"git = {_git_version()}",
        f"command = {command}",
        f"config_file = {Path(config_path).name}",
        f"outputs = {' '.join(outputs)}",
        "",
        "[effective settings]",
        *_describe(cfg),
        "",
        "[config file]",
        text.rstrip("\n"),
        "",
    ]
    (Path(out_dir) / "manifest.txt").write_text("\n".join(lines))


def _out_dir(path):
    d = Path(path)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _progress(value, done, total):
    if done == total or done % max(1, total // 10) == 0:
        log.info("sweep value %s: %d/%d trials", value, done, total)


# ---------------------------------------------------------------------------


def cmd_recover(args):
    try:
        Y = read_complex_csv(args.y)
        Phi = read_complex_csv(args.phi)
        norm = MixedNormIndex.parse(args.norm).require_supported()
        if Y.shape[0] != Phi.shape[0]:
            raise UsageError(f"Y has {Y.shape[0]} rows but Phi has {Phi.shape[0]}")
        cfg = SolverConfig(
            K=args.K, norm=norm, max_iters=args.max_iters, rel_tol=args.rel_tol,
            init_mode=args.init, record_trace=args.trace,
        )
        state = sniht_solve(Y, Phi, cfg)
    except (ValueError, OSError, UnsupportedNormError) as exc:
        raise UsageError(str(exc)) from None

    out = _out_dir(args.out)
    write_complex_csv(out / "S.csv", state.S)
    (out / "support.txt").write_text(format_support(state.support) + "\n")
    if args.trace:
        with open(out / "trace.csv", "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["iteration", "objective", "mu", "support_change"])
            for t in state.trace:
                w.writerow([t.iteration, repr(t.objective), repr(t.mu), t.support_change])
    log.info("%s after %d iterations, support %s",
             "converged" if state.converged else "stopped at iteration cap",
             state.n_iter, format_support(state.support))
    return EXIT_OK if state.converged else EXIT_NOT_CONVERGED


def cmd_simulate(args):
    cfg = load_config(args.config, "simulate", seed=args.seed, threads=args.threads)
    out = _out_dir(args.out)
    rows = run_sweep(cfg, progress=_progress)
    write_results_csv(out / "results.csv", rows)
    write_manifest(out, "simulate", args.config, cfg, ["results.csv"])
    for r in rows:
        log.info("%s=%g (%s): PER %.3f  MSE %.2f dB", r.sweep_var, r.sweep_value, r.method, r.per, r.mse_db)
    return EXIT_OK


def cmd_doa(args):
    cfg = load_config(args.config, "doa", seed=args.seed, threads=args.threads)
    out = _out_dir(args.out)
    grid, results = run_doa(cfg)
    write_histogram_csv(out / "histogram.csv", grid, results)
    write_per_csv(out / "per.csv", results, cfg.trials)
    write_manifest(out, "doa", args.config, cfg, ["histogram.csv", "per.csv"])
    for r in results:
        log.info("SNR %g dB, %s: PER %.3f", r.snr_db, method_label(r.method), r.per)
    return EXIT_OK


def cmd_oracle(args):
    cfg = load_config(args.config, "oracle", seed=args.seed, threads=args.threads)
    try:
        trials = run_oracle_comparison(cfg)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    out = _out_dir(args.out)
    labels = [method_label(m) for m in cfg.methods]
    with open(out / "comparison.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", "true_support", "oracle_support",
                    *(f"{lab}_support" for lab in labels), *(f"{lab}_agrees" for lab in labels)])
        for t in trials:
            w.writerow([
                t.trial, format_support(t.true_support), format_support(t.oracle_support),
                *(format_support(s) for s in t.method_supports),
                *(int(s == t.oracle_support) for s in t.method_supports),
            ])
    rates = oracle_agreement(trials, cfg.methods)
    oracle_truth = sum(t.oracle_support == t.true_support for t in trials) / len(trials)
    with open(out / "summary.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["method", "trials", "agreement"])
        w.writerow(["oracle_vs_truth", len(trials), repr(oracle_truth)])
        for mth, lab in zip(cfg.methods, labels):
            w.writerow([lab, len(trials), repr(rates[mth])])
    write_manifest(out, "oracle", args.config, cfg, ["comparison.csv", "summary.csv"])
    for lab, mth in zip(labels, cfg.methods):
        log.info("%s agrees with the oracle in %.1f%% of trials", lab, 100 * rates[mth])
    return EXIT_OK


def cmd_selftest(args):
    from .selftest import run_selftest

    ok = True
    for name, passed, detail in run_selftest():
        print(f"{'PASS' if passed else 'FAIL'}  {name}: {detail}")
        ok &= passed
    return EXIT_OK if ok else EXIT_USAGE


# ---------------------------------------------------------------------------


def build_parser():
    ap = argparse.ArgumentParser(prog="sniht", description="Robust joint-sparse recovery with SNIHT(p,q).")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    ap.add_argument("-v", "--verbose", action="count", default=0, help="-v for progress, -vv for debug")
    sub = ap.add_subparsers(dest="command", required=True)

    rc = sub.add_parser("recover", help="recover a row-sparse signal from Y and Phi")
    rc.add_argument("--y", required=True, help="measurements, complex CSV (m x q)")
    rc.add_argument("--phi", required=True, help="measurement matrix, complex CSV (m x p)")
    rc.add_argument("-K", type=int, required=True, help="row sparsity level")
    rc.add_argument("--norm", default="2,2", help="mixed norm pair: 2,2 | 1,1 | 2,1")
    rc.add_argument("--init", choices=("rownorm", "peak"), default="rownorm")
    rc.add_argument("--max-iters", type=int, default=500)
    rc.add_argument("--rel-tol", type=float, default=1e-6)
    rc.add_argument("--trace", action="store_true", help="also write trace.csv")
    rc.add_argument("-o", "--out", default=".", help="output directory")
    rc.set_defaults(func=cmd_recover)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "run a Monte Carlo sweep"),
        ("doa", cmd_doa, "run a DOA estimation study"),
        ("oracle", cmd_oracle, "compare solver supports with exhaustive search"),
    ):
        sp = sub.add_parser(name, help=helptext)
        sp.add_argument("config", help="config file")
        sp.add_argument("-o", "--out", default=f"results/{name}", help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=None, help="worker processes")
        sp.set_defaults(func=func)

    st = sub.add_parser("selftest", help="quick internal consistency checks")
    st.set_defaults(func=cmd_selftest)
    return ap


def main(argv=None):
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(message)s")
    try:
        return args.func(args)
    except (UsageError, ConfigError) as exc:
        print(f"sniht: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
