"""Brute-force maximizer of the constrained deduct-demand efficiency.

Independent of the closed forms: it only evaluates the raw objective and the
raw harvest constraint (noise floor included), rejecting infeasible points.
Candidates are the power lattice plus, per lattice row and column, the exact
crossing of the harvest boundary, so optima on the active constraint are
resolved as well as interior ones. The inner loop runs in
:mod:`swiptmac._kernels`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import InfeasibleEverywhere, ScenarioError
from .model import PowerAllocation, Scenario, efficiency_net, harvested_energy

WINDOW_CELLS = 2
REFINE_FACTOR = 10


@dataclass(frozen=True)
class OracleResult:
    alloc: PowerAllocation
    eta: float
    grid_step: tuple[float, float]
    feasible_points: int


def _axis(p_max, n):
    # A user without power budget contributes a single lattice point.
    if p_max <= 0:
        return np.zeros(1)
    return np.linspace(0.0, p_max, n + 1)


def _search(s, chi, axes, steps, kernel=None):
    kernel = _kernels.lattice_argmax if kernel is None else kernel
    (h0, h1), (g0, g1) = s.h, s.g
    x0, x1, eta, count = kernel(
        axes[0], axes[1], h0, h1, g0, g1, s.p_circuit_total, chi, s.block_t, s.sigma_h_sq
    )
    if count == 0:
        raise InfeasibleEverywhere(f"no lattice point harvests chi={chi!r} J", chi=chi)
    alloc = PowerAllocation((x0, x1))
    # re-verify with the reference formulas rather than trusting the loop
    if harvested_energy(alloc, s) < chi:
        raise AssertionError("oracle returned an infeasible point")
    return OracleResult(alloc, efficiency_net(alloc, s, chi), steps, count)


def grid_search(s: Scenario, chi: float, n: int, kernel=None) -> OracleResult:
    """Exhaustive search over the ``(n+1) x (n+1)`` lattice on the power box.

    Ties resolve to the lexicographically smallest allocation.
    """
    if n < 2:
        raise ScenarioError(f"n must be >= 2, got {n!r}")
    axes = [_axis(m, n) for m in s.p_max]
    steps = tuple(m / n for m in s.p_max)
    return _search(s, chi, axes, steps, kernel)


def refined_search(
    s: Scenario, chi: float, coarse_n: int, refine_rounds: int, kernel=None
) -> OracleResult:
    """Coarse lattice search, then ``refine_rounds`` zooms at 10x resolution.

    Each round re-grids a window of +-2 current cells around the incumbent,
    so the final step is ``p_max / (coarse_n * 10**refine_rounds)``.
    """
    if refine_rounds < 0:
        raise ScenarioError(f"refine_rounds must be >= 0, got {refine_rounds!r}")
    best = grid_search(s, chi, coarse_n, kernel)
    steps = best.grid_step
    for _ in range(refine_rounds):
        fine = tuple(st / REFINE_FACTOR for st in steps)
        span = np.arange(-WINDOW_CELLS * REFINE_FACTOR, WINDOW_CELLS * REFINE_FACTOR + 1)
        axes = []
        for k in range(2):
            m = s.p_max[k]
            if m <= 0:
                axes.append(np.zeros(1))
                continue
            pts = np.clip(best.alloc.p[k] + span * fine[k], 0.0, m)
            axes.append(np.unique(pts))
        best = _search(s, chi, axes, fine, kernel)
        steps = fine
    return best
