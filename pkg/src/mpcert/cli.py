"""Command line entry points.

Five subcommands share one config format: `check` runs the structural
hypotheses, `thresholds` the a-priori constant chain, `solve` the full
pipeline, `certify` re-runs the certificates on a previously emitted
profile.csv, and `sweep` the family-of-radii admissibility table. Exit
status is 0 for a clean pass, 1 for a failed check or solve, 2 for a
config problem.
"""

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ConfigError, parse_config
from .pipeline import (
    StageError,
    run_certify,
    run_check,
    run_pipeline,
    run_sweep,
    run_thresholds,
)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpcert",
        description="certify radial mountain-pass solutions from a TOML "
                    "config")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [
        ("check", "verify the structural hypotheses and stop"),
        ("solve", "run the full pipeline: solve, certify, report"),
        ("certify", "re-certify the profile.csv in the output directory"),
        ("sweep", "admissibility over a table of (R, Lambda) pairs"),
        ("thresholds", "a-priori constants and admissibility thresholds"),
    ]:
        cmd = sub.add_parser(name, help=text)
        cmd.add_argument("--config", required=True, type=Path,
                         help="TOML run configuration")
        cmd.add_argument("--out", type=Path, default=None,
                         help="output directory (overrides [output] dir)")
        cmd.add_argument("--seed", type=int, default=None,
                         help="PRNG seed override")
        cmd.add_argument("--mesh", type=int, default=None,
                         help="node count override")
        cmd.add_argument("--rmax", type=float, default=None,
                         help="truncation radius override")
    return parser


def _apply_overrides(cfg, args):
    updates = {}
    if args.out is not None:
        updates["out_dir"] = args.out
    if args.seed is not None:
        updates["seed"] = args.seed
    if args.mesh is not None:
        updates["nodes"] = args.mesh
    if args.rmax is not None:
        updates["r_max"] = args.rmax
    return replace(cfg, **updates) if updates else cfg


def _print_hypotheses(report):
    entry = report.data.get("hypotheses") or {}
    ok = entry.get("all_ok")
    flags = sorted(k for k, v in entry.items()
                   if k.endswith("_ok") and k != "all_ok" and v is False)
    line = "hypotheses: ok" if ok else "hypotheses: FAILED"
    if flags:
        line += " (" + ", ".join(flags) + ")"
    print(line)


def _print_solve(report):
    entry = report.data.get("solve") or {}
    if not entry:
        return
    state = "converged" if entry.get("converged") else "NOT converged"
    c = entry["c"]["value"]
    res = entry["residual"]["value"]
    its = entry["iterations"]["value"]
    print(f"solve: {state}, level c = {c:.12g}, residual = {res:.3e}, "
          f"{its} iterations")


def _print_certificates(report):
    entry = report.data.get("certificates") or {}
    if not entry:
        return
    for rec in entry.get("checks", []):
        mark = "pass" if rec["passed"] else "FAIL"
        margin = rec["margin"]["value"]
        text = "" if margin is None else f" (margin {margin:.6g})"
        print(f"  {rec['name']}: {mark}{text}")
    diag = entry.get("diagnostic") or {}
    if diag:
        mark = "pass" if diag.get("passed") else "FAIL"
        note = diag.get("note") or ""
        tail = f" [{note}]" if note else ""
        print(f"  iteration diagnostic: {mark}{tail}")
    print(f"certificates: verdict {entry.get('verdict')}")


def _print_thresholds(report):
    entry = report.data.get("thresholds") or {}
    if not entry or entry.get("mode") == "sweep":
        return
    lam_star = entry["lambda_star"]["value"]
    tilde = entry["lambda_tilde_star"]["value"]
    claimed = entry["claimed_lambda"]["value"]
    verdict = "admissible" if entry.get("admissible") else "NOT admissible"
    print(f"thresholds: lambda* = {lam_star:.12g}, scale-free = {tilde:.12g},"
          f" claimed {claimed:.12g} is {verdict}")
    if "mu_star" in entry:
        mu_star = entry["mu_star"]["value"]
        mu = entry["claimed_mu"]["value"]
        ok = "admissible" if entry.get("admissible_mu") else "NOT admissible"
        print(f"thresholds: mu* = {mu_star:.12g}, claimed {mu:.12g} is {ok}",
              file=out)


def _print_sweep(report):
    entry = report.data.get("thresholds") or {}
    if entry.get("mode") != "sweep":
        return
    for rec in entry.get("pairs", []):
        r_j = rec["R"]["value"]
        lam = rec["lam"]["value"]
        star = rec["lambda_star"]["value"]
        verdict = "admissible" if rec["admissible"] else "not admissible"
        print(f"  R = {r_j:g}: Lambda = {lam:.6g}, lambda* = {star:.6g}, "
              f"{verdict}")
    print(f"sweep trend verdict: {entry.get('verdict')}")


def _print_outputs(report):
    for name, path in sorted(report.outputs.items()):
        print(f"wrote {name}: {path}")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = parse_config(args.config)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        cfg = _apply_overrides(cfg, args)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    is_sweep = cfg.spec.mode == "sweep"
    if args.command == "sweep" and not is_sweep:
        print("config error: 'sweep' needs a [sweep] table in the config",
              file=sys.stderr)
        return 2
    if args.command in ("solve", "certify", "thresholds") and is_sweep:
        print(f"config error: this config carries a [sweep] table; "
              f"run 'mpcert sweep', not '{args.command}'", file=sys.stderr)
        return 2

    try:
        if args.command == "check":
            report = run_check(cfg)
            _print_hypotheses(report)
        elif args.command == "thresholds":
            report = run_thresholds(cfg)
            _print_hypotheses(report)
            _print_thresholds(report)
        elif args.command == "solve":
            report = run_pipeline(cfg)
            _print_hypotheses(report)
            _print_solve(report)
            _print_certificates(report)
            _print_thresholds(report)
        elif args.command == "certify":
            profile = Path(cfg.out_dir) / "profile.csv"
            if not profile.exists():
                print(f"config error: no profile at {profile}; run "
                      "'mpcert solve' first or point --out at a directory "
                      "holding profile.csv", file=sys.stderr)
                return 2
            report = run_certify(cfg, profile)
            _print_hypotheses(report)
            _print_certificates(report)
            _print_thresholds(report)
        else:
            report = run_sweep(cfg)
            _print_hypotheses(report)
            _print_sweep(report)
    except StageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        if exc.report is not None and exc.report.outputs.get("report"):
            print(f"partial report: {exc.report.outputs['report']}",
                  file=sys.stderr)
        return 1

    _print_outputs(report)
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
