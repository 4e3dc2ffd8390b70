"""Parameter sweeps over demand, transmit power and circuit power; scenario sampling.

Sweeps return one :class:`SweepRecord` per grid point, in grid order, and
never drop a point: infeasible or ill-posed points carry a status instead.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .allocator import Thresholds, solve, thresholds
from .errors import DenominatorNonpositive, Infeasible, SwiptError
from .model import (
    PowerAllocation,
    Scenario,
    UserLink,
    efficiency_net,
    harvested_energy,
    sum_rate,
)
from .oracle import refined_search

RNG_ALGORITHM = "numpy.random.PCG64/inverse-cdf-exponential"

STATUS_OK = "ok"
STATUS_INFEASIBLE = "infeasible"
STATUS_DENOMINATOR = "denominator_nonpositive"
STATUS_BELOW_DEMAND = "below_demand"
STATUS_NUMERIC = "numerical_error"
SLICE = "Slice"

CSV_COLUMNS = ("chi", "p1", "p2", "eta", "rate", "harvested", "regime", "status")

# Reference two-user scenario; circuit and peak powers are repository defaults.
REFERENCE_H = (0.8, 0.4)
REFERENCE_G1 = 0.5
DEFAULT_P_CIRCUIT = 0.3
DEFAULT_P_MAX = 2.0


def reference_scenario(g2: float = 0.3, p_circuit: float = DEFAULT_P_CIRCUIT, p_max: float = DEFAULT_P_MAX):
    """h = (0.8, 0.4), g = (0.5, g2), equal peak and circuit power per user."""
    return Scenario.from_arrays(REFERENCE_H, (REFERENCE_G1, g2), (p_max, p_max), (p_circuit, p_circuit))


@dataclass(frozen=True)
class SweepRecord:
    chi: float
    p: tuple[float, float]
    eta: float
    rate: float
    harvested: float
    regime: str
    status: str = STATUS_OK
    oracle_eta: float | None = None
    x: float | None = None  # swept value when the axis is not chi

    @property
    def ok(self):
        return self.status == STATUS_OK


_NAN2 = (math.nan, math.nan)


def _failed(chi, status, x=None):
    return SweepRecord(chi, _NAN2, math.nan, math.nan, math.nan, "", status, None, x)


def _solve_record(s, chi, th, with_oracle, coarse_n, refine_rounds, x=None):
    try:
        out = solve(s, chi, th)
    except Infeasible:
        return _failed(chi, STATUS_INFEASIBLE, x)
    except DenominatorNonpositive:
        return _failed(chi, STATUS_DENOMINATOR, x)
    except SwiptError:
        return _failed(chi, STATUS_NUMERIC, x)
    oracle_eta = None
    if with_oracle:
        oracle_eta = refined_search(s, chi, coarse_n, refine_rounds).eta
    return SweepRecord(
        chi, out.alloc.p, out.eta, out.rate, out.harvested, out.regime.value, STATUS_OK, oracle_eta, x
    )


def sweep_chi(
    s: Scenario,
    chi_grid: Iterable[float],
    with_oracle: bool = False,
    coarse_n: int = 400,
    refine_rounds: int = 2,
) -> list[SweepRecord]:
    """Optimal allocation at every demand of ``chi_grid`` (ascending)."""
    grid = [float(c) for c in chi_grid]
    if any(b < a for a, b in zip(grid, grid[1:])):
        raise ValueError("chi grid must be sorted ascending")
    th = thresholds(s)
    return [_solve_record(s, chi, th, with_oracle, coarse_n, refine_rounds) for chi in grid]


def sweep_power(s: Scenario, user: int, p_grid: Iterable[float], chi: float = 0.0) -> list[SweepRecord]:
    """Deduct-demand efficiency along one user's power, the other user silent.

    The harvest constraint is not enforced; points that miss the demand are
    kept with status ``below_demand``.
    """
    if user not in (0, 1):
        raise ValueError(f"user must be 0 or 1, got {user!r}")
    records = []
    for v in p_grid:
        p = [0.0, 0.0]
        p[user] = float(v)
        alloc = PowerAllocation(tuple(p)).check(s)
        try:
            eta = efficiency_net(alloc, s, chi)
        except DenominatorNonpositive:
            records.append(_failed(chi, STATUS_DENOMINATOR, float(v)))
            continue
        harvested = harvested_energy(alloc, s)
        status = STATUS_OK if harvested >= chi else STATUS_BELOW_DEMAND
        records.append(
            SweepRecord(chi, alloc.p, eta, sum_rate(alloc, s), harvested, SLICE, status, None, float(v))
        )
    return records


def with_circuit_power(s: Scenario, p_c: float) -> Scenario:
    """Copy of ``s`` whose total circuit power is ``p_c``, split evenly between users."""
    users = tuple(replace(u, p_circuit=p_c / 2.0) for u in s.users)
    return replace(s, users=users)


def sweep_circuit_power(s: Scenario, pc_grid: Iterable[float], chi: float = 0.0) -> list[SweepRecord]:
    """Optimal allocation at fixed demand as the total circuit power varies."""
    records = []
    for pc in pc_grid:
        pc = float(pc)
        if pc < 0:
            raise ValueError(f"circuit power must be >= 0, got {pc!r}")
        s_pc = with_circuit_power(s, pc)
        records.append(_solve_record(s_pc, chi, thresholds(s_pc), False, 0, 0, x=pc))
    return records


def sample_scenario(seed: int, mean_gain: float, template: Scenario) -> Scenario:
    """Draw h and g of both users from an exponential law with mean ``mean_gain``.

    Uniforms come from ``numpy.random.default_rng(seed)`` (PCG64) in the order
    h1, h2, g1, g2 and are mapped by the inverse CDF ``-a ln(1 - u)``. Peak
    powers, circuit powers, noise and block length are copied from the template.
    """
    if not mean_gain > 0:
        raise ValueError(f"mean gain must be > 0, got {mean_gain!r}")
    u = np.random.default_rng(seed).random(4)
    draws = -mean_gain * np.log1p(-u)
    users = tuple(
        UserLink(float(draws[k]), float(draws[2 + k]), t.p_max, t.p_circuit)
        for k, t in enumerate(template.users)
    )
    return replace(template, users=users)


def sample_gains(seed: int, mean_gain: float, count: int) -> np.ndarray:
    """``count`` exponential draws with the same generator and mapping as sample_scenario."""
    u = np.random.default_rng(seed).random(count)
    return -mean_gain * np.log1p(-u)


def is_passive(s: Scenario) -> bool:
    """True when no EH link returns more energy than is transmitted (g <= 1)."""
    return all(u.g <= 1.0 for u in s.users)


# --------------------------------------------------------------------------
# CSV output
# --------------------------------------------------------------------------


def fmt(x) -> str:
    """Twelve significant digits, the number format shared by CSV, text and JSON output."""
    if x is None:
        return ""
    x = float(x)
    if math.isnan(x):
        return "nan"
    return f"{x:.12g}"


def scenario_preamble(s: Scenario, meta: dict | None = None, extra: Sequence[str] = ()):
    lines = [f"# block_t = {fmt(s.block_t)}", f"# sigma_h_sq = {fmt(s.sigma_h_sq)}"]
    for k, u in enumerate(s.users, start=1):
        lines.append(
            f"# user{k}: h = {fmt(u.h)}, g = {fmt(u.g)}, p_max = {fmt(u.p_max)}, "
            f"p_circuit = {fmt(u.p_circuit)}"
        )
    meta = dict(meta or {})
    lines.append(f"# seed = {meta.pop('seed', 'none')}")
    lines.append(f"# rng = {meta.pop('rng', RNG_ALGORITHM)}")
    for key in sorted(meta):
        lines.append(f"# {key} = {meta[key]}")
    lines.extend(f"# {line}" for line in extra)
    return lines


def to_csv(
    records: Sequence[SweepRecord],
    s: Scenario,
    with_oracle: bool = False,
    meta: dict | None = None,
    extra: Sequence[str] = (),
) -> str:
    """Render records with a ``#`` preamble; columns per :data:`CSV_COLUMNS`."""
    buf = io.StringIO()
    for line in scenario_preamble(s, meta, extra):
        buf.write(line + "\n")
    cols = CSV_COLUMNS + (("oracle_eta",) if with_oracle else ())
    buf.write(",".join(cols) + "\n")
    for r in records:
        row = [fmt(r.chi), fmt(r.p[0]), fmt(r.p[1]), fmt(r.eta), fmt(r.rate), fmt(r.harvested), r.regime, r.status]
        if with_oracle:
            row.append(fmt(r.oracle_eta) if r.oracle_eta is not None else "nan")
        buf.write(",".join(row) + "\n")
    return buf.getvalue()


def threshold_lines(th: Thresholds):
    return [
        f"chi_star = {fmt(th.chi_star)}",
        f"chi_prime = {fmt(th.chi_prime)}",
        f"chi_max = {fmt(th.chi_max)}",
    ]
