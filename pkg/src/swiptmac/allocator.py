"""Globally optimal power allocation for the two-user SWIPT MAC.

The objective is the deduct-demand efficiency

    eta(p) = log2(1 + h0 p0 + h1 p1) / (Pc + p0 + p1 - chi/T)

maximized over the box ``0 <= p_k <= p_max_k`` subject to the harvest
constraint ``T (g0 p0 + g1 p1) + sigma_h^2 >= chi``. eta is pseudo-concave,
so the KKT conditions identify the global optimum. The solver works in two
steps:

1. Drop the harvest constraint. Rate depends on ``h . p`` and cost on
   ``p0 + p1``, so the user with the larger ``h`` (the *leader*) is filled
   first; its stationary point is ``(exp(W(Gamma/e) + 1) - 1) / h``. If the
   leader saturates, the follower is filled the same way.
2. If that point does not harvest enough, the optimum sits on the line
   ``g . p = r``. Along the line both the SNR and the net consumption are
   affine in the leader power, ``eta = log2(alpha + beta p) / (gamma + delta p)``,
   whose stationary point is again a Lambert W expression (the ``A``-formula),
   clipped to the part of the line inside the box.

The regimes (constraint inactive, leader alone on the constraint, both users,
follower saturated) and the thresholds chi*, chi', chi_max that separate them
fall out of this construction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from .errors import (
    ConstraintForcedActive,
    DenominatorNonpositive,
    Infeasible,
    NoRoot,
    ScenarioError,
)
from .lambert import lambert_w0, solve_omega
from .model import (
    DENOMINATOR_GUARD,
    Demand,
    PowerAllocation,
    Scenario,
    efficiency_net,
    harvested_energy,
    net_gradient,
    sum_rate,
)

TIE_TOL = 1e-12
BISECT_TOL = 1e-10
BISECT_MAX_ITER = 200
FD_STEP = 1e-6
KKT_TOL = 1e-6


class Regime(str, Enum):
    CONSTRAINT_INACTIVE = "ConstraintInactive"
    SINGLE_USER_ACTIVE = "SingleUserActive"
    BOTH_USERS_ACTIVE = "BothUsersActive"
    PEAK_LIMITED = "PeakLimited"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Thresholds:
    """Demand levels (raw Joules) separating the solution regimes."""

    chi_star: float
    chi_prime: float
    chi_max: float
    leader: int
    flags: tuple[str, ...] = ()

    @property
    def follower(self):
        return 1 - self.leader

    @property
    def degenerate(self):
        return any(f.startswith("degenerate") for f in self.flags)


@dataclass(frozen=True)
class SolverOutcome:
    alloc: PowerAllocation
    eta: float
    rate: float
    harvested: float
    regime: Regime
    thresholds: Thresholds
    multiplier: float
    chi: float
    flags: tuple[str, ...] = ()


def leader_index(s: Scenario) -> int:
    """Index of the user with the stronger ID gain; near-ties go to user 0."""
    h0, h1 = s.h
    return 1 if h1 > h0 + TIE_TOL else 0


# --------------------------------------------------------------------------
# internal geometry, leader/follower order, per-unit-time quantities
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class _Pair:
    hi: float
    hj: float
    gi: float
    gj: float
    mi: float
    mj: float
    pc: float
    leader: int

    @classmethod
    def of(cls, s):
        i = leader_index(s)
        a, b = s.users[i], s.users[1 - i]
        return cls(a.h, b.h, a.g, b.g, a.p_max, b.p_max, s.p_circuit_total, i)

    def to_alloc(self, pi, pj):
        pi = min(max(pi, 0.0), self.mi)
        pj = min(max(pj, 0.0), self.mj)
        return PowerAllocation((pi, pj) if self.leader == 0 else (pj, pi))

    def from_alloc(self, alloc):
        p = alloc.p
        return (p[0], p[1]) if self.leader == 0 else (p[1], p[0])


def _normalized(s, chi):
    """(deduction, requirement) per unit time for raw demand chi."""
    t = s.block_t
    return chi / t, max(0.0, chi - s.sigma_h_sq) / t


def _best_free(h_free, h_fixed, p_fixed, cost, cap):
    """Efficiency-maximizing power of one user with the other pinned at p_fixed.

    Maximizes ``log2(omega0 + h_free p) / (cost + p_fixed + p)`` on [0, cap];
    the stationary point solves ``omega ln omega - omega = Gamma`` with
    ``Gamma = h_free (cost + p_fixed) - 1 - h_fixed p_fixed``.
    """
    if h_free <= 0.0 or cap <= 0.0:
        return 0.0
    omega0 = 1.0 + h_fixed * p_fixed
    gamma = h_free * (cost + p_fixed) - 1.0 - h_fixed * p_fixed
    omega = solve_omega(gamma) if gamma >= -1.0 else 1.0
    return min(max((omega - omega0) / h_free, 0.0), cap)


def _relaxed(pr, d):
    """Optimum with the harvest constraint dropped, or None if it does not exist."""
    cost = pr.pc - d
    if cost <= DENOMINATOR_GUARD:
        return None
    pi = _best_free(pr.hi, pr.hj, 0.0, cost, pr.mi)
    pj = 0.0
    if pi >= pr.mi and pr.mj > 0.0:
        pj = _best_free(pr.hj, pr.hi, pr.mi, cost, pr.mj)
    return pi, pj


def _min_net_consumption(pr, d, r):
    """Smallest per-unit-time net consumption over the feasible polygon."""
    pts = [(0.0, 0.0), (pr.mi, 0.0), (0.0, pr.mj), (pr.mi, pr.mj)]
    if pr.gi > 0:
        pts += [(r / pr.gi, 0.0), ((r - pr.gj * pr.mj) / pr.gi, pr.mj)]
    if pr.gj > 0:
        pts += [(0.0, r / pr.gj), (pr.mi, (r - pr.gi * pr.mi) / pr.gj)]
    best = math.inf
    slack = 1e-12 * max(1.0, r)
    for pi, pj in pts:
        if -slack <= pi <= pr.mi + slack and -slack <= pj <= pr.mj + slack:
            if pr.gi * pi + pr.gj * pj >= r - slack:
                best = min(best, pr.pc + pi + pj - d)
    return best


def _segment(pr, r):
    """Endpoints of the constraint line inside the box, parametrized by p_i.

    Returns ``(lo, lo_point, hi, hi_point)``. Endpoints are built from the
    bound they touch, so a silent follower is exactly 0 and a saturated user
    is exactly at its peak.
    """
    if r <= pr.gj * pr.mj:
        lo, lo_pt = 0.0, (0.0, r / pr.gj)
    else:
        lo = (r - pr.gj * pr.mj) / pr.gi
        lo_pt = (lo, pr.mj)
    if r <= pr.gi * pr.mi:
        hi, hi_pt = r / pr.gi, (r / pr.gi, 0.0)
    else:
        hi = pr.mi
        hi_pt = (pr.mi, (r - pr.gi * pr.mi) / pr.gj)
    return lo, lo_pt, hi, hi_pt


def _line_coefficients(pr, d, r):
    """alpha, beta, gamma, delta of SNR and net consumption along g . p = r."""
    alpha = 1.0 + pr.hj * r / pr.gj
    beta = pr.hi - pr.hj * pr.gi / pr.gj
    gamma = pr.pc - d + r / pr.gj
    delta = 1.0 - pr.gi / pr.gj
    return alpha, beta, gamma, delta


def _constrained(pr, d, r, flags):
    """Optimum on the active harvest constraint ``gi pi + gj pj = r``."""
    cost = pr.pc - d
    if pr.gi > 0.0 and pr.gj > 0.0:
        lo, lo_pt, hi, hi_pt = _segment(pr, r)
        if abs(pr.gj - pr.gi) <= TIE_TOL:
            flags.append("degenerate: equal EH gains, leader served first")
            return hi_pt
        alpha, beta, gamma, delta = _line_coefficients(pr, d, r)
        if beta * delta > 0.0:
            a_cap = beta * gamma / delta - alpha
            omega = solve_omega(a_cap) if a_cap >= -1.0 else 1.0
            p = (omega - alpha) / beta
        elif beta > 0.0 or (beta == 0.0 and delta < 0.0):
            p = math.inf
        elif beta < 0.0 or delta > 0.0:
            p = -math.inf
        else:
            p = math.inf
        if p >= hi:
            return hi_pt
        if p <= lo:
            return lo_pt
        return p, (r - pr.gi * p) / pr.gj
    if pr.gi > 0.0:
        pi = r / pr.gi
        return pi, _best_free(pr.hj, pr.hi, pi, cost, pr.mj)
    if pr.gj > 0.0:
        pj = r / pr.gj
        return _best_free(pr.hi, pr.hj, pj, cost, pr.mi), pj
    raise Infeasible("no user reaches the EH receiver", chi=r)


def _multiplier(s, pr, pi, pj, chi):
    """Harvest-constraint multiplier mu >= 0 from d eta/dp_k + mu T g_k = 0."""
    grad = net_gradient(pr.to_alloc(pi, pj).p, s, chi)
    gi_grad, gj_grad = (grad[0], grad[1]) if pr.leader == 0 else (grad[1], grad[0])
    t = s.block_t
    users = ((pi, pr.mi, pr.gi, gi_grad), (pj, pr.mj, pr.gj, gj_grad))
    interior = [-gr / (t * g) for p, m, g, gr in users if 0.0 < p < m and g > 0.0]
    if interior:
        return max(0.0, interior[0])
    upper = [-gr / (t * g) for p, m, g, gr in users if p >= m and m > 0.0 and g > 0.0]
    return max([0.0] + upper)


# --------------------------------------------------------------------------
# public operations
# --------------------------------------------------------------------------


def unconstrained_optimum(h: float, p_c: float, chi: float, p_max: float = math.inf) -> float:
    """Single-user efficiency-maximizing power with the harvest constraint ignored.

    ``Gamma = h (P_c - chi) - 1``; raises ConstraintForcedActive when
    ``Gamma < -1`` because the stationary point then does not exist.
    """
    if h <= 0:
        raise ScenarioError(f"h must be > 0, got {h!r}")
    gamma = h * (p_c - chi) - 1.0
    if gamma < -1.0:
        raise ConstraintForcedActive(
            f"Gamma={gamma!r} < -1: demand {chi!r} exceeds circuit power {p_c!r}"
        )
    return min(p_max, (solve_omega(gamma) - 1.0) / h)


def chi_max(s: Scenario) -> float:
    """Largest feasible demand: both users at peak power."""
    return s.block_t * sum(u.g * u.p_max for u in s.users) + s.sigma_h_sq


def _relaxed_harvest_surplus(s, pr, chi):
    d, _ = _normalized(s, chi)
    u = _relaxed(pr, d)
    if u is None:
        # cost <= 0: stationary point gone; the zero-power limit is the relaxed answer
        u = (0.0, 0.0)
    return s.block_t * (pr.gi * u[0] + pr.gj * u[1]) + s.sigma_h_sq - chi


def _bisect(f, lo, hi, f_lo=None, f_hi=None):
    """Root of f on [lo, hi] given a sign change (f(lo) > 0 >= f(hi))."""
    f_lo = f(lo) if f_lo is None else f_lo
    f_hi = f(hi) if f_hi is None else f_hi
    if not (f_lo > 0.0 >= f_hi):
        raise NoRoot(f"no sign change on [{lo!r}, {hi!r}]: f={f_lo!r}, {f_hi!r}")
    for _ in range(BISECT_MAX_ITER):
        if hi - lo <= BISECT_TOL:
            break
        mid = 0.5 * (lo + hi)
        if f(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _chi_star(s, pr, cmax, flags):
    f = lambda chi: _relaxed_harvest_surplus(s, pr, chi)  # noqa: E731
    f0 = f(0.0)
    if f0 <= 0.0:
        flags.append("constraint active from chi=0")
        return 0.0
    f1 = f(cmax)
    if f1 > 0.0:
        return cmax
    return _bisect(f, 0.0, cmax, f0, f1)


def chi_star(s: Scenario) -> float:
    """Demand at which the harvest constraint starts to bind.

    Root of ``T g . u(chi) + sigma_h^2 = chi`` where ``u`` is the relaxed
    optimum; with sigma_h^2 = 0 and an unclipped leader this is
    ``W((h_i (P_c - chi) - 1)/e) + 1 = ln(1 + h_i chi / g_i)``.
    """
    return thresholds(s).chi_star


def _case_b_residual(s, pr, chi):
    """ln(1 + h_i r/g_i) - ln(omega_A): positive once the follower should transmit."""
    d, r = _normalized(s, chi)
    alpha, beta, gamma, delta = _line_coefficients(pr, d, r)
    a_cap = beta * gamma / delta - alpha
    log_omega = lambert_w0(a_cap / math.e).w + 1.0 if a_cap >= -1.0 else 0.0
    return math.log1p(pr.hi * r / pr.gi) - log_omega


def _follower_pull(s, pr, chi):
    """Directional derivative along the constraint, towards follower power, at (r/g_i, 0)."""
    d, r = _normalized(s, chi)
    alloc = pr.to_alloc(r / pr.gi, 0.0)
    grad = net_gradient(alloc.p, s, chi)
    di, dj = (grad[0], grad[1]) if pr.leader == 0 else (grad[1], grad[0])
    return pr.gi * dj - pr.gj * di


def _chi_prime(s, pr, c_star, cmax, flags):
    t, sigma = s.block_t, s.sigma_h_sq
    leader_cap = min(t * pr.gi * pr.mi + sigma, cmax)
    if pr.mj <= 0.0 or pr.gi <= 0.0:
        return max(c_star, leader_cap if pr.gi > 0.0 else c_star)
    if leader_cap <= c_star:
        flags.append("follower active below chi*")
        return c_star
    if abs(pr.gi - pr.gj) <= TIE_TOL:
        flags.append("degenerate: equal EH gains, leader served first")
        return leader_cap
    beta = pr.hi - pr.hj * pr.gi / pr.gj if pr.gj > 0 else math.nan
    if pr.gi > pr.gj and pr.gj > 0.0 and beta >= 0.0:
        return leader_cap
    if pr.gj > pr.gi:
        f = lambda chi: -_case_b_residual(s, pr, chi)  # noqa: E731
    else:
        flags.append("chi' from directional KKT test")
        f = lambda chi: -_follower_pull(s, pr, chi)  # noqa: E731
    lo = c_star
    f_lo = f(lo)
    f_hi = f(leader_cap)
    if f_hi > 0.0:
        return leader_cap
    if f_lo <= 0.0:
        flags.append("degenerate: follower active from chi*")
        return c_star
    return _bisect(f, lo, leader_cap, f_lo, f_hi)


def thresholds(s: Scenario) -> Thresholds:
    """chi*, chi' and chi_max for a scenario, in raw Joules."""
    pr = _Pair.of(s)
    flags = []
    cmax = chi_max(s)
    c_star = _chi_star(s, pr, cmax, flags)
    c_prime = _chi_prime(s, pr, c_star, cmax, flags)
    c_prime = min(max(c_prime, c_star), cmax)
    return Thresholds(c_star, c_prime, cmax, pr.leader, tuple(dict.fromkeys(flags)))


def chi_prime(s: Scenario) -> float:
    """Largest demand the leader serves alone on the active constraint."""
    return thresholds(s).chi_prime


def solve(s: Scenario, chi: float, th: Thresholds | None = None) -> SolverOutcome:
    """Optimal allocation, efficiency and regime for demand ``chi`` (Joules)."""
    chi = Demand(chi).chi
    th = thresholds(s) if th is None else th
    pr = _Pair.of(s)
    d, r = _normalized(s, chi)
    cap = pr.gi * pr.mi + pr.gj * pr.mj
    if r > cap * (1.0 + 1e-12) + 1e-15:
        raise Infeasible(
            f"demand chi={chi!r} J exceeds chi_max={th.chi_max!r} J", chi=chi, chi_max=th.chi_max
        )
    r = min(r, cap)
    min_net = _min_net_consumption(pr, d, r)
    if min_net <= DENOMINATOR_GUARD:
        raise DenominatorNonpositive(
            f"net consumption reaches {min_net!r} W on the feasible set at chi={chi!r}; "
            "efficiency is unbounded"
        )
    flags = []
    u = _relaxed(pr, d)
    if u is not None and pr.gi * u[0] + pr.gj * u[1] >= r:
        pi, pj = u
        regime = Regime.CONSTRAINT_INACTIVE
        if pj > 0.0:
            flags.append("leader saturated, follower fills")
    else:
        if u is None:
            flags.append("constraint forced active (Gamma < -1)")
        pi, pj = _constrained(pr, d, r, flags)
        if pj <= 0.0:
            regime = Regime.SINGLE_USER_ACTIVE
        elif pj >= pr.mj:
            regime = Regime.PEAK_LIMITED
        else:
            regime = Regime.BOTH_USERS_ACTIVE
    alloc = pr.to_alloc(pi, pj)
    pi, pj = pr.from_alloc(alloc)
    mu = 0.0 if regime is Regime.CONSTRAINT_INACTIVE else _multiplier(s, pr, pi, pj, chi)
    return SolverOutcome(
        alloc=alloc,
        eta=efficiency_net(alloc, s, chi),
        rate=sum_rate(alloc, s),
        harvested=harvested_energy(alloc, s),
        regime=regime,
        thresholds=th,
        multiplier=mu,
        chi=chi,
        flags=tuple(flags),
    )


def optimal_efficiency(s: Scenario, chi: float, outcome: SolverOutcome | None = None) -> float:
    """Optimal efficiency from the piecewise closed form in the optimal leader power.

    Below chi*: ``h_i log2(omega*) / (Gamma + omega*)``. On the active
    constraint: ``log2(1 + (h_i - a_j g_i) P_i + a_j r) /
    (P_c + (1 - g_i/g_j) P_i + r/g_j - chi/T)`` with ``a_j = h_j/g_j``.
    Other configurations (clipped leader, follower with zero EH gain) fall
    back to the plain ratio.
    """
    out = solve(s, chi) if outcome is None else outcome
    pr = _Pair.of(s)
    d, r = _normalized(s, out.chi)
    pi, pj = pr.from_alloc(out.alloc)
    if out.regime is Regime.CONSTRAINT_INACTIVE and pj == 0.0 and 0.0 < pi < pr.mi:
        gamma = pr.hi * (pr.pc - d) - 1.0
        omega = solve_omega(gamma)
        return pr.hi * math.log2(omega) / (gamma + omega)
    if out.regime is not Regime.CONSTRAINT_INACTIVE and pr.gj > 0.0:
        a_j = pr.hj / pr.gj
        num = math.log2(1.0 + (pr.hi - a_j * pr.gi) * pi + a_j * r)
        den = pr.pc + (1.0 - pr.gi / pr.gj) * pi + r / pr.gj - d
        return num / den
    omega = 1.0 + pr.hi * pi + pr.hj * pj
    return math.log2(omega) / (pr.pc + pi + pj - d)


# --------------------------------------------------------------------------
# KKT diagnostics
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class UserKKT:
    user: int
    power: float
    position: str  # "interior", "lower" or "upper"
    gradient: float
    gradient_fd: float
    residual: float  # interior: d eta/dp + mu T g; bounds: signed slack (>= 0 is fine)

    @property
    def ok(self):
        if self.position == "interior":
            return abs(self.residual) <= KKT_TOL
        return self.residual >= -KKT_TOL


@dataclass(frozen=True)
class KKTReport:
    users: tuple[UserKKT, UserKKT]
    multiplier: float
    complementary_slackness: float

    @property
    def ok(self):
        return all(u.ok for u in self.users) and abs(self.complementary_slackness) <= KKT_TOL

    @property
    def max_stationarity(self):
        vals = [abs(u.residual) for u in self.users if u.position == "interior"]
        return max(vals, default=0.0)


def _fd_partial(s, p, k, chi, step=FD_STEP):
    m = s.users[k].p_max
    lo = max(0.0, p[k] - step)
    hi = min(m, p[k] + step)

    def eta_at(v):
        q = list(p)
        q[k] = v
        return efficiency_net(PowerAllocation(tuple(q)), s, chi)

    return (eta_at(hi) - eta_at(lo)) / (hi - lo)


def kkt_residuals(s: Scenario, outcome: SolverOutcome, chi: float | None = None) -> KKTReport:
    """Stationarity and complementary-slackness residuals at a solver outcome.

    Uses the multiplier convention ``d eta/dp_k + mu T g_k = 0`` with
    ``mu >= 0``; at a lower bound the slack ``-(d eta/dp_k + mu T g_k)`` and at
    an upper bound ``d eta/dp_k + mu T g_k`` must be non-negative.
    """
    chi = outcome.chi if chi is None else chi
    p = outcome.alloc.p
    mu = outcome.multiplier
    grad = net_gradient(p, s, chi)
    rows = []
    for k in range(2):
        u = s.users[k]
        lagr = grad[k] + mu * s.block_t * u.g
        if u.p_max > 0 and 0.0 < p[k] < u.p_max:
            position, res = "interior", lagr
        elif p[k] <= 0.0:
            position, res = "lower", -lagr
        else:
            position, res = "upper", lagr
        fd = _fd_partial(s, p, k, chi) if u.p_max > 0 else grad[k]
        rows.append(UserKKT(k, p[k], position, grad[k], fd, res))
    cs = mu * (outcome.harvested - chi)
    return KKTReport(tuple(rows), mu, cs)
