"""Command-line entry point: ``swipt-mac {solve,thresholds,sweep,verify,sample}``.

Exit codes: 0 success, 1 verification breach, 2 parse or usage error,
3 infeasible demand, 4 numerical domain error. All numeric inputs are in SI
base units (W, J, s) without suffixes.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import _kernels
from .allocator import kkt_residuals, leader_index, solve, thresholds
from .errors import Infeasible, ScenarioError, SwiptError
from .oracle import refined_search
from .scenario_io import format_scenario, load_scenario
from .sweep import (
    RNG_ALGORITHM,
    fmt,
    sample_scenario,
    sweep_chi,
    sweep_circuit_power,
    sweep_power,
    to_csv,
)

EXIT_OK = 0
EXIT_BREACH = 1
EXIT_USAGE = 2
EXIT_INFEASIBLE = 3
EXIT_NUMERIC = 4

SELF_TEST_FACTOR = 1.1


class UsageError(ScenarioError):
    """Bad command-line values that argparse cannot check on its own."""


def _num(x):
    """Round to the shared 12-digit format so text and JSON carry the same value."""
    if x is None:
        return None
    x = float(fmt(x))
    return None if math.isnan(x) else x


def _emit(report: dict, as_json: bool, out=None):
    out = sys.stdout if out is None else out
    if as_json:
        json.dump(report, out, indent=2, allow_nan=False)
        out.write("\n")
        return

    def walk(prefix, value):
        if isinstance(value, dict):
            for key, sub in value.items():
                walk(f"{prefix}.{key}" if prefix else key, sub)
        elif isinstance(value, list):
            out.write(f"{prefix} = {', '.join(str(v) for v in value) or '-'}\n")
        elif isinstance(value, float):
            out.write(f"{prefix} = {fmt(value)}\n")
        elif value is None:
            out.write(f"{prefix} = -\n")
        else:
            out.write(f"{prefix} = {value}\n")

    walk("", report)


def _threshold_report(th):
    return {
        "chi_star": _num(th.chi_star),
        "chi_prime": _num(th.chi_prime),
        "chi_max": _num(th.chi_max),
        "leader": th.leader + 1,
        "degenerate": th.degenerate,
        "flags": list(th.flags),
    }


def cmd_solve(args):
    s, _ = load_scenario(args.scenario)
    if args.chi < 0:
        raise UsageError(f"--chi must be >= 0, got {args.chi!r}")
    out = solve(s, args.chi)
    kkt = kkt_residuals(s, out)
    report = {
        "chi": _num(out.chi),
        "p1": _num(out.alloc.p[0]),
        "p2": _num(out.alloc.p[1]),
        "eta": _num(out.eta),
        "rate": _num(out.rate),
        "harvested": _num(out.harvested),
        "regime": out.regime.value,
        "flags": list(out.flags),
        "thresholds": _threshold_report(out.thresholds),
        "kkt": {
            "multiplier": _num(kkt.multiplier),
            "complementary_slackness": _num(kkt.complementary_slackness),
            "ok": kkt.ok,
        },
    }
    for u in kkt.users:
        report["kkt"][f"user{u.user + 1}"] = {
            "position": u.position,
            "gradient": _num(u.gradient),
            "gradient_fd": _num(u.gradient_fd),
            "residual": _num(u.residual),
        }
    _emit(report, args.json)
    return EXIT_OK


def cmd_thresholds(args):
    s, _ = load_scenario(args.scenario)
    _emit(_threshold_report(thresholds(s)), args.json)
    return EXIT_OK


def _range(start, stop, step):
    if not (math.isfinite(start) and math.isfinite(stop) and math.isfinite(step)):
        raise UsageError("range bounds must be finite")
    if step <= 0:
        raise UsageError(f"--step must be > 0, got {step!r}")
    if stop < start:
        raise UsageError(f"--start {start!r} exceeds --stop {stop!r}")
    # the small slack keeps `stop` on the grid despite rounding in (stop-start)/step
    n = int(math.floor((stop - start) / step + 1e-9))
    return start + step * np.arange(n + 1)


def _write_new(path: Path, text: str, force: bool):
    if path.exists() and not force:
        raise UsageError(f"{path}: refusing to overwrite without --force")
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def cmd_sweep(args):
    s, meta = load_scenario(args.scenario)
    out_path = Path(args.output)
    if out_path.exists() and not args.force:
        raise UsageError(f"{out_path}: refusing to overwrite without --force")
    if args.threads:
        _kernels.set_threads(args.threads)
    grid = _range(args.start, args.stop, args.step)
    extra = [f"axis = {args.axis}", f"start = {fmt(args.start)}", f"stop = {fmt(args.stop)}",
             f"step = {fmt(args.step)}"]
    with_oracle = False
    if args.axis == "chi":
        with_oracle = args.oracle
        if with_oracle:
            extra.append(f"oracle = coarse_n {args.coarse_n}, refine_rounds {args.refine_rounds}")
        records = sweep_chi(s, grid, with_oracle, args.coarse_n, args.refine_rounds)
    else:
        if args.oracle:
            raise UsageError("--oracle is only available on the chi axis")
        if args.chi < 0:
            raise UsageError(f"--chi must be >= 0, got {args.chi!r}")
        extra.append(f"chi = {fmt(args.chi)}")
        if args.axis == "power":
            if args.user not in (1, 2):
                raise UsageError(f"--user must be 1 or 2, got {args.user!r}")
            if grid[-1] > s.users[args.user - 1].p_max:
                raise UsageError(f"power grid exceeds p_max of user {args.user}")
            extra.append(f"user = {args.user}")
            records = sweep_power(s, args.user - 1, grid, args.chi)
        else:
            records = sweep_circuit_power(s, grid, args.chi)
    text = to_csv(records, s, with_oracle, meta, extra)
    _write_new(out_path, text, args.force)
    print(f"{len(records)} rows written to {out_path}")
    return EXIT_OK


def verify_grid(s, grid, resolution, refine_rounds, solver_s=None):
    """Largest eta gap and allocation distance (in final cells) between the
    oracle on ``s`` and the closed form on ``solver_s`` (default ``s``)."""
    solver_s = s if solver_s is None else solver_s
    th = thresholds(solver_s)
    max_deta = 0.0
    max_cells = 0.0
    for chi in grid:
        ref = refined_search(s, chi, resolution, refine_rounds)
        got = solve(solver_s, chi, th)
        max_deta = max(max_deta, abs(got.eta - ref.eta))
        for k in range(2):
            if ref.grid_step[k] > 0:
                max_cells = max(max_cells, abs(got.alloc.p[k] - ref.alloc.p[k]) / ref.grid_step[k])
    return max_deta, max_cells


def cmd_verify(args):
    s, _ = load_scenario(args.scenario)
    if args.resolution < 2:
        raise UsageError(f"--resolution must be >= 2, got {args.resolution!r}")
    if args.points < 1:
        raise UsageError(f"--points must be >= 1, got {args.points!r}")
    if args.threads:
        _kernels.set_threads(args.threads)
    th = thresholds(s)
    stop = th.chi_max if args.chi_stop is None else args.chi_stop
    if stop < args.chi_start or args.chi_start < 0:
        raise UsageError("need 0 <= --chi-start <= --chi-stop")
    grid = np.linspace(args.chi_start, stop, args.points)

    solver_s = s
    if args.self_test:
        # negative control: the solver sees a wrong gain, the oracle the true one
        k = leader_index(s)
        users = list(s.users)
        users[k] = replace(users[k], h=users[k].h * SELF_TEST_FACTOR)
        solver_s = replace(s, users=tuple(users))

    max_deta, max_cells = verify_grid(s, grid, args.resolution, args.refine_rounds, solver_s)
    passed = max_deta <= args.tol and max_cells <= 1.0
    report = {
        "points": len(grid),
        "max_abs_eta_diff": _num(max_deta),
        "tolerance": _num(args.tol),
        "max_alloc_diff_cells": _num(max_cells),
        "self_test": args.self_test,
        "result": "pass" if passed else "fail",
    }
    _emit(report, args.json)
    return EXIT_OK if passed else EXIT_BREACH


def cmd_sample(args):
    template, _ = load_scenario(args.template)
    if not args.mean_gain > 0:
        raise UsageError(f"--mean-gain must be > 0, got {args.mean_gain!r}")
    s = sample_scenario(args.seed, args.mean_gain, template)
    meta = {"seed": args.seed, "rng": RNG_ALGORITHM, "mean_gain": repr(args.mean_gain),
            "template": Path(args.template).name}
    _write_new(Path(args.output), format_scenario(s, meta), args.force)
    print(f"scenario written to {args.output}")
    return EXIT_OK


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser():
    p = _Parser(prog="swipt-mac", description=__doc__.splitlines()[0])
    p.add_argument("--backend", action="store_true", help="print the kernel backend and exit")
    sub = p.add_subparsers(dest="command", parser_class=_Parser)

    sp = sub.add_parser("solve", help="optimal allocation at one demand")
    sp.add_argument("scenario")
    sp.add_argument("--chi", type=float, required=True, help="harvest demand in J")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("thresholds", help="regime boundaries chi*, chi', chi_max")
    sp.add_argument("scenario")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_thresholds)

    sp = sub.add_parser("sweep", help="write a CSV sweep over chi, transmit power or circuit power")
    sp.add_argument("scenario")
    sp.add_argument("--axis", choices=("chi", "power", "pc"), required=True)
    sp.add_argument("--start", type=float, required=True)
    sp.add_argument("--stop", type=float, required=True)
    sp.add_argument("--step", type=float, required=True)
    sp.add_argument("--user", type=int, default=1, help="swept user on the power axis (1 or 2)")
    sp.add_argument("--chi", type=float, default=0.0, help="fixed demand for the power and pc axes")
    sp.add_argument("--oracle", action="store_true", help="add a brute-force oracle_eta column")
    sp.add_argument("--coarse-n", type=int, default=400)
    sp.add_argument("--refine-rounds", type=int, default=2)
    sp.add_argument("--threads", type=int, default=0, help="oracle worker threads (0: all)")
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--force", action="store_true", help="overwrite an existing output file")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="compare the closed form with the brute-force oracle")
    sp.add_argument("scenario")
    sp.add_argument("--points", type=int, default=50)
    sp.add_argument("--chi-start", type=float, default=0.0)
    sp.add_argument("--chi-stop", type=float, default=None, help="default: chi_max")
    sp.add_argument("--resolution", type=int, default=400, help="coarse lattice cells per axis")
    sp.add_argument("--refine-rounds", type=int, default=2)
    sp.add_argument("--tol", type=float, default=1e-5, help="eta tolerance in bits/J")
    sp.add_argument("--threads", type=int, default=0)
    sp.add_argument("--self-test", action="store_true",
                    help="perturb the leader's ID gain for the solver; must fail")
    sp.add_argument("--json", action="store_true")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("sample", help="draw exponential-fading gains into a new scenario file")
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--mean-gain", type=float, required=True)
    sp.add_argument("--template", required=True)
    sp.add_argument("-o", "--output", required=True)
    sp.add_argument("--force", action="store_true")
    sp.set_defaults(func=cmd_sample)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # --help or a usage error
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    if args.backend:
        print(_kernels.BACKEND)
        return EXIT_OK
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    try:
        return args.func(args)
    except Infeasible as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return EXIT_INFEASIBLE
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SwiptError as exc:
        print(f"numerical error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
