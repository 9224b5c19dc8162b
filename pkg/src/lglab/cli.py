"""Command-line front end.

Exit codes: 0 success, 2 invalid configuration, 3 internal check failure,
4 report I/O failure.  The default report destination is the directory
named by ``LGLAB_OUTPUT_DIR`` (file ``<mode>.<format>``), else stdout.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .beables import NODE_POLICIES, BeableConfig, simulate_trajectory, trajectory_records
from .inequalities import PairwiseTables, analyze, coupling_oracle, max_violation_search, \
    oracle_concordance
from .montecarlo import (
    EnsembleSpec,
    conditional_records,
    equivariance_records,
    invasiveness_records,
    lg_records,
    signalling_scan,
)
from .quantum import EnsembleState, PureState, evolve
from .report import ReportWriteError, emit_report
from .sequential import MeasurementSchedule, Scenario

OUTPUT_DIR_ENV = "LGLAB_OUTPUT_DIR"
MODES = ("analytic", "simulate", "scan-delta0", "max-violation", "oracle-check")
EXPERIMENTS = ("lg", "equivariance", "invasiveness", "conditional")
SCAN_COLUMNS = ("eta", "delta0_analytic", "delta0_empirical", "std_error", "n")
COMPARISON_COLUMNS = ("experiment", "quantity", "phase", "analytic", "empirical",
                      "std_error", "n", "deviation_se")


class ConfigError(ValueError):
    pass


def _common(p: argparse.ArgumentParser, phases: bool = True, sim: bool = False) -> None:
    out = p.add_argument_group("output")
    out.add_argument("--out", help="report path ('-' for stdout)")
    out.add_argument("--format", choices=("csv", "json"), default="csv")
    if phases:
        g = p.add_argument_group("preparation and phases (radians)")
        g.add_argument("--initial", default="R",
                       help="R, L, mixed, or pure amplitudes 'a_R,a_L' (Python complex "
                            "literals), all specified at phase tau0")
        g.add_argument("--tau0", type=float, default=0.0,
                       help="phase at which the initial state is specified")
        g.add_argument("--eta", type=float, default=None,
                       help="first measurement phase relative to tau0 (default 0)")
        g.add_argument("--spacing", type=float, default=None,
                       help="equal spacing between measurements (default 2pi/3)")
        g.add_argument("--spacing-frac", type=float, default=None,
                       help="equal spacing as a fraction of 2pi")
        g.add_argument("--tau1", type=float)
        g.add_argument("--tau2", type=float)
        g.add_argument("--tau3", type=float)
        g.add_argument("--scenario", choices=("pairs", "two-runs"), default="pairs")
    if sim:
        s = p.add_argument_group("simulation")
        s.add_argument("--n", dest="n_trajectories", type=int, default=10000,
                       help="trajectories per measurement context")
        s.add_argument("--dt", type=float, default=1e-3)
        s.add_argument("--node-policy", choices=NODE_POLICIES, default="adaptive")
        s.add_argument("--rate-cap", type=float, default=0.1)
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, default=1,
                       help="worker threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lglab",
        description="Leggett-Garg statistics, signalling analysis and beable simulation.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("--config", help="JSON file of option values; flags override it")
    sub = parser.add_subparsers(dest="mode", metavar="MODE")

    p = sub.add_parser("analytic", help="exact correlators, signalling and inequality verdicts")
    _common(p)

    p = sub.add_parser("simulate", help="beable Monte Carlo compared with quantum predictions")
    _common(p, sim=True)
    p.add_argument("--experiment", choices=EXPERIMENTS, default="lg")
    p.add_argument("--checkpoints", type=int, default=20,
                   help="equivariance checkpoints spread over [0, horizon]")
    p.add_argument("--horizon", type=float, default=2 * math.pi)
    p.add_argument("--tau-i", type=float, default=math.pi / 2,
                   help="earlier measurement phase (invasiveness, conditional)")
    p.add_argument("--tau-k", type=float, default=math.pi,
                   help="later measurement phase (invasiveness, conditional)")
    p.add_argument("--dump-trajectories", metavar="PATH",
                   help="also write an event-level CSV of sample paths")
    p.add_argument("--dump-count", type=int, default=10)

    p = sub.add_parser("scan-delta0", help="signalling measure over the first phase eta")
    _common(p, sim=True)
    p.add_argument("--grid", type=int, default=12, help="eta points in [0, 2pi)")
    p.add_argument("--analytic-only", action="store_true",
                   help="skip the simulation (same as --n 0)")

    p = sub.add_parser("max-violation", help="spacings maximizing the LG violation")
    _common(p, phases=False)
    p.add_argument("--grid", type=int, default=2000, help="grid points per axis")

    p = sub.add_parser("oracle-check", help="coupling oracle vs modified inequality")
    _common(p, phases=False)
    p.add_argument("--instances", type=int, default=500)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _load_config(path: str) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("config file must hold a JSON object")
    aliases = {"n": "n_trajectories"}
    out = {}
    for k, v in data.items():
        k = k.replace("-", "_")
        out[aliases.get(k, k)] = v
    return out


def parse_args(argv: Optional[List[str]]) -> argparse.Namespace:
    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    # --config may appear anywhere, so it is peeled off before the real parse
    config_path, rest = None, []
    it = iter(argv)
    for a in it:
        if a == "--config":
            config_path = next(it, None)
            if config_path is None:
                parser.error("--config needs a path")
        elif a.startswith("--config="):
            config_path = a.split("=", 1)[1]
        else:
            rest.append(a)
    argv = rest
    config = _load_config(config_path) if config_path else {}

    mode = config.pop("mode", None)
    if mode is not None and not any(a in MODES for a in argv):
        argv = [mode] + argv
    if config:
        chosen = next((a for a in argv if a in MODES), None)
        subparser = parser._subparsers._group_actions[0].choices.get(chosen) if chosen else None
        if subparser is None:
            parser.error("config values need a mode")
        known = {a.dest for a in subparser._actions}
        unknown = sorted(set(config) - known)
        if unknown:
            parser.error(f"unknown config keys: {', '.join(unknown)}")
        subparser.set_defaults(**config)
    args = parser.parse_args(argv)
    if args.mode is None:
        parser.error(f"a mode is required: {', '.join(MODES)}")
    return args


def parse_initial(text: str, tau0: float) -> EnsembleState:
    key = str(text).strip()
    if key.lower() == "mixed":
        return EnsembleState.maximally_mixed()
    if key.upper() == "R":
        state = PureState.R()
    elif key.upper() == "L":
        state = PureState.L()
    else:
        try:
            a, b = (complex(part.strip().replace(" ", "")) for part in key.split(","))
            state = PureState.from_amplitudes(a, b)
        except ValueError as exc:
            raise ConfigError(f"cannot parse initial state {text!r}") from exc
    return EnsembleState.pure(evolve(state, -tau0))


def resolve_phases(args) -> tuple:
    explicit = (args.tau1, args.tau2, args.tau3)
    if any(t is not None for t in explicit):
        if None in explicit:
            raise ConfigError("give all of --tau1, --tau2, --tau3 or none")
        if args.eta is not None or args.spacing is not None or args.spacing_frac is not None:
            raise ConfigError("explicit phases cannot be combined with --eta/--spacing")
        return tuple(float(t) for t in explicit)
    if args.spacing is not None and args.spacing_frac is not None:
        raise ConfigError("give either --spacing or --spacing-frac")
    spacing = 2 * math.pi / 3
    if args.spacing is not None:
        spacing = args.spacing
    elif args.spacing_frac is not None:
        spacing = 2 * math.pi * args.spacing_frac
    tau1 = args.tau0 + (args.eta or 0.0)
    return tau1, tau1 + spacing, tau1 + 2 * spacing


def _spec(args, initial) -> EnsembleSpec:
    if args.n_trajectories < 1:
        raise ConfigError("--n must be positive")
    if args.threads < 1:
        raise ConfigError("--threads must be positive")
    try:
        cfg = BeableConfig(dt=args.dt, node_policy=args.node_policy,
                           rate_cap=args.rate_cap, seed=args.seed)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    return EnsembleSpec(args.n_trajectories, initial, cfg=cfg, threads=args.threads)


def _check_order(taus, strict: bool = True) -> None:
    bad = any(b <= a if strict else b < a for a, b in zip(taus, taus[1:]))
    if bad:
        raise ConfigError(f"phases must increase: {taus}")


def run_analytic(args):
    taus = resolve_phases(args)
    _check_order(taus)
    initial = parse_initial(args.initial, args.tau0)
    scenario = Scenario.parse(args.scenario)
    report = analyze(initial, *taus, scenario)
    record = {"initial": args.initial, "scenario": scenario.value, "eta": taus[0] - args.tau0,
              "tau1": taus[0], "tau2": taus[1], "tau3": taus[2]}
    record.update(report.to_record())
    ok = True
    record.update(oracle_min_mismatch=None, oracle_contextual=None)
    if scenario is Scenario.SEPARATE_PAIRS:
        oracle = coupling_oracle(PairwiseTables.from_state(initial, *taus))
        record.update(oracle_min_mismatch=oracle.min_mismatch,
                      oracle_contextual=oracle.contextual)
        ok = oracle.contextual == report.contextual
    return [record], None, ok


def run_simulate(args):
    initial = parse_initial(args.initial, args.tau0)
    spec = _spec(args, initial)
    if args.experiment == "lg":
        taus = resolve_phases(args)
        _check_order(taus, strict=False)
        if taus[0] < 0:
            raise ConfigError("simulated phases must be non-negative")
        records = lg_records(spec, taus, args.scenario)
    elif args.experiment == "equivariance":
        if args.checkpoints < 1 or args.horizon <= 0:
            raise ConfigError("need a positive number of checkpoints and horizon")
        records = equivariance_records(spec, np.linspace(0, args.horizon, args.checkpoints))
    else:
        if not 0 <= args.tau_i < args.tau_k:
            raise ConfigError("need 0 <= --tau-i < --tau-k")
        fn = invasiveness_records if args.experiment == "invasiveness" else conditional_records
        records = fn(spec, args.tau_i, args.tau_k)
    ok = True
    if args.dump_trajectories:
        taus = resolve_phases(args)
        if args.experiment == "lg":
            schedule, horizon = MeasurementSchedule(taus), taus[-1]
        elif args.experiment == "equivariance":
            schedule, horizon = None, args.horizon
        else:
            schedule, horizon = MeasurementSchedule((args.tau_i, args.tau_k)), args.tau_k
        paths = [simulate_trajectory(initial, schedule, horizon, spec.cfg, index=k, stream="dump")
                 for k in range(args.dump_count)]
        ok = all(p.is_faithful() for p in paths)
        emit_report(trajectory_records(paths), "csv", args.dump_trajectories)
    return records, COMPARISON_COLUMNS, ok


def run_scan(args):
    if args.grid < 1:
        raise ConfigError("--grid must be positive")
    if args.tau1 is not None or args.eta is not None:
        raise ConfigError("scan-delta0 scans eta itself; drop --eta/--tau*")
    spacing = resolve_phases(args)
    spacing = spacing[1] - spacing[0]
    initial = parse_initial(args.initial, args.tau0)
    analytic_only = args.analytic_only or args.n_trajectories == 0
    if analytic_only:
        args.n_trajectories = max(args.n_trajectories, 1)
    spec = _spec(args, initial)
    etas = np.arange(args.grid) * (2 * math.pi / args.grid)
    # eta is counted from tau0; the simulation clock starts at phase 0
    if args.tau0 < 0 and not analytic_only:
        raise ConfigError("simulated phases must be non-negative")
    rows = signalling_scan(spec, args.tau0 + etas, spacing, args.scenario,
                           empirical=not analytic_only)
    for row, eta in zip(rows, etas):
        row["eta"] = float(eta)
        if analytic_only:
            row["n"] = 0
    return [{k: r[k] for k in SCAN_COLUMNS} for r in rows], SCAN_COLUMNS, True


def run_max_violation(args):
    if args.grid < 1000:
        raise ConfigError("--grid must be at least 1000")
    best = max_violation_search(args.grid)
    return [{"alpha": best.alpha, "beta": best.beta, "lhs": best.lhs, "grid": args.grid}], \
        None, True


def run_oracle(args):
    if args.instances < 0:
        raise ConfigError("--instances must be non-negative")
    rows = oracle_concordance(args.instances, args.seed)
    return rows, None, all(r["agree"] for r in rows)


RUNNERS = {
    "analytic": run_analytic,
    "simulate": run_simulate,
    "scan-delta0": run_scan,
    "max-violation": run_max_violation,
    "oracle-check": run_oracle,
}


def _destination(args) -> Optional[str]:
    if args.out:
        return args.out
    outdir = os.environ.get(OUTPUT_DIR_ENV)
    if outdir:
        return os.path.join(outdir, f"{args.mode}.{args.format}")
    return None


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_args(argv)
    except ConfigError as exc:
        print(f"lglab: error: {exc}", file=sys.stderr)
        return 2
    except SystemExit as exc:
        # argparse exits 0 for --help/--version and 2 for usage errors
        return exc.code if isinstance(exc.code, int) else 2
    try:
        records, columns, ok = RUNNERS[args.mode](args)
    except (ConfigError, ValueError) as exc:
        print(f"lglab: error: {exc}", file=sys.stderr)
        return 2
    try:
        emit_report(records, args.format, _destination(args), report=args.mode, columns=columns)
    except ReportWriteError as exc:
        print(f"lglab: error: {exc}", file=sys.stderr)
        return 4
    if not ok:
        print("lglab: internal consistency check failed", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
