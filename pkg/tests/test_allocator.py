import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st
from scipy.optimize import brentq

from oracles import deduct_demand_eta_1d, golden_max, w0_mp
from swiptmac import (
    ConstraintForcedActive,
    DenominatorNonpositive,
    Infeasible,
    Regime,
    Scenario,
    ScenarioError,
    chi_max,
    chi_prime,
    chi_star,
    efficiency_baseline,
    efficiency_net,
    kkt_residuals,
    optimal_efficiency,
    refined_search,
    solve,
    thresholds,
    unconstrained_optimum,
)
from swiptmac.allocator import leader_index
from swiptmac.lambert import solve_omega


def two_user(h=(0.8, 0.4), g=(0.5, 0.3), pc=0.6, p_max=(2.0, 2.0), sigma=0.0):
    return Scenario.from_arrays(h, g, p_max, (pc / 2, pc / 2), sigma)


# -- unconstrained optimum -----------------------------------------------------


def test_unconstrained_optimum_known_values():
    assert unconstrained_optimum(1.0, 1.0, 0.0) == pytest.approx(math.e - 1, rel=1e-15)
    assert unconstrained_optimum(1.0, 1.0, 1.0) == pytest.approx(0.0, abs=1e-7)
    assert unconstrained_optimum(1.0, 50.0, 0.0, p_max=2.0) == 2.0
    with pytest.raises(ConstraintForcedActive):
        unconstrained_optimum(1.0, 1.0, 1.5)


def test_unconstrained_optimum_matches_golden_section():
    got = unconstrained_optimum(0.8, 0.6, 0.0, p_max=2.0)
    expected = (math.exp(w0_mp(-0.52 / math.e) + 1) - 1) / 0.8
    assert got == pytest.approx(expected, abs=1e-12)
    ref = golden_max(deduct_demand_eta_1d(0.8, 0.6, 0.0), 0.0, 2.0)
    assert got == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("chi", [0.0, 0.1, 0.3, 0.5])
def test_unconstrained_optimum_moves_left_with_demand(chi):
    assert unconstrained_optimum(0.8, 0.6, chi) <= unconstrained_optimum(0.8, 0.6, 0.0)


# -- thresholds ----------------------------------------------------------------


def brute_chi_star(h, g, pc, p_max, sigma=0.0):
    """Root of W((h (P_c - chi) - 1) / e) + 1 - ln(1 + h (chi - sigma) / g).

    The efficiency deducts the raw demand while the harvest constraint only
    needs ``chi - sigma`` from the transmitters.
    """

    def f(chi):
        gamma = h * (pc - chi) - 1.0
        if gamma < -1.0:
            return -math.inf
        return math.log(solve_omega(gamma)) - math.log1p(h * max(chi - sigma, 0.0) / g)

    return brentq(f, sigma, sigma + g * p_max, xtol=1e-14, rtol=1e-14)


def test_chi_star_matches_independent_root(ref03, ref08):
    ref = brute_chi_star(0.8, 0.5, 0.6, 2.0)
    assert chi_star(ref03) == pytest.approx(ref, abs=1e-9)
    assert chi_star(ref08) == pytest.approx(ref, abs=1e-9)
    assert ref == pytest.approx(0.392874, abs=1e-6)


def test_chi_star_with_noise_floor():
    base = chi_star(two_user())
    noisy = chi_star(two_user(sigma=0.05))
    assert noisy == pytest.approx(brute_chi_star(0.8, 0.5, 0.6, 2.0, sigma=0.05), abs=1e-9)
    # the floor pays for part of the demand, but the deduction still lowers p*
    assert base < noisy < base + 0.05


def test_chi_star_flags_constraint_active_from_zero():
    # without circuit power the unconstrained optimum is p = 0, so any demand binds
    th = thresholds(two_user(pc=0.0))
    assert th.chi_star == 0.0
    assert "constraint active from chi=0" in th.flags


def test_chi_prime_case_a(ref03):
    assert chi_prime(ref03) == pytest.approx(1.0, abs=1e-12)
    assert chi_max(ref03) == pytest.approx(1.6, abs=1e-15)


def test_chi_prime_case_b_is_the_follower_onset(ref08):
    cp = chi_prime(ref08)
    assert cp == pytest.approx(0.914999, abs=1e-5)
    assert solve(ref08, cp - 1e-6).alloc.p[1] == 0.0
    assert solve(ref08, cp + 1e-6).alloc.p[1] > 0.0


def test_chi_prime_single_user(single_user):
    th = thresholds(single_user)
    assert th.chi_prime == pytest.approx(0.5 * 5.0)
    assert th.chi_max == pytest.approx(2.5)


def test_threshold_ordering_and_degenerate_flag():
    s = two_user(g=(0.4, 0.4))
    th = thresholds(s)
    assert th.degenerate
    assert 0 <= th.chi_star <= th.chi_prime <= th.chi_max


def test_leader_is_largest_h_with_ties_to_lower_index():
    assert leader_index(two_user(h=(0.4, 0.8))) == 1
    assert leader_index(two_user(h=(0.8, 0.8))) == 0
    assert leader_index(two_user(h=(0.8, 0.8 + 1e-13))) == 0


# -- solve ---------------------------------------------------------------------


def test_solve_at_zero_demand(ref03):
    out = solve(ref03, 0.0)
    assert out.regime is Regime.CONSTRAINT_INACTIVE
    assert out.alloc.p[1] == 0.0
    assert out.alloc.p[0] == pytest.approx(unconstrained_optimum(0.8, 0.6, 0.0, 2.0), abs=1e-15)
    ref = golden_max(deduct_demand_eta_1d(0.8, 0.6, 0.0), 0.0, 2.0)
    assert out.alloc.p[0] == pytest.approx(ref, abs=1e-6)
    assert out.eta == pytest.approx(efficiency_baseline(out.alloc, ref03), rel=1e-15)
    assert out.multiplier == 0.0


def test_solve_at_chi_prime_and_chi_max(ref03):
    out = solve(ref03, 1.0)
    assert out.alloc.p == (2.0, 0.0)
    top = solve(ref03, 1.6)
    assert top.alloc.p == (2.0, 2.0)
    assert top.regime is Regime.PEAK_LIMITED
    with pytest.raises(Infeasible, match="chi_max"):
        solve(ref03, 1.6 + 1e-6)


def test_solve_both_active_agrees_with_grid_oracle(ref08):
    chi = 1.5
    out = solve(ref08, chi)
    assert out.regime is Regime.BOTH_USERS_ACTIVE
    ref = refined_search(ref08, chi, 400, 1)
    assert out.eta == pytest.approx(ref.eta, abs=1e-3)
    assert out.eta >= ref.eta - 1e-9


def test_solve_follower_saturates_at_peak(ref08):
    out = solve(ref08, 2.3)
    assert out.alloc.p[1] == 2.0
    assert out.alloc.p[0] < 2.0
    assert out.alloc.p[0] == pytest.approx((2.3 - 0.8 * 2.0) / 0.5, abs=1e-12)


def test_solve_single_user_regimes(single_user):
    th = thresholds(single_user)
    below = solve(single_user, 0.5 * th.chi_star)
    assert below.regime is Regime.CONSTRAINT_INACTIVE
    above = solve(single_user, 0.5 * (th.chi_star + th.chi_max))
    assert above.regime is Regime.SINGLE_USER_ACTIVE
    assert above.harvested == pytest.approx(above.chi, abs=1e-12)


def test_solve_rejects_bad_demand(ref03):
    with pytest.raises(ScenarioError):
        solve(ref03, -0.1)
    with pytest.raises(ScenarioError):
        solve(ref03, math.nan)


def test_denominator_nonpositive_surfaces():
    # lossless harvesting and no circuit power: net consumption can vanish
    s = Scenario.from_arrays((0.8, 0.4), (1.0, 1.0), (2.0, 2.0), (0.0, 0.0))
    with pytest.raises(DenominatorNonpositive):
        solve(s, 0.5)


# -- efficiency identities -------------------------------------------------------


def test_optimal_efficiency_single_user_gamma_zero(single_user):
    assert optimal_efficiency(single_user, 0.0) == pytest.approx(math.log2(math.e) / math.e, rel=1e-14)


def test_optimal_efficiency_continuous_at_chi_star(ref03):
    c = chi_star(ref03)
    a = optimal_efficiency(ref03, c - 1e-9)
    b = optimal_efficiency(ref03, c + 1e-9)
    assert abs(a - b) <= 1e-6


def test_optimal_efficiency_matches_solver_on_sweep(ref03, ref08):
    for s in (ref03, ref08):
        for chi in np.linspace(0, chi_max(s), 41):
            out = solve(s, chi)
            assert optimal_efficiency(s, chi, out) == pytest.approx(efficiency_net(out.alloc, s, chi), rel=1e-9)


def test_efficiency_decreases_in_gamma():
    gammas = np.linspace(-0.999, 50.0, 400)
    vals = []
    for g in gammas:
        w = solve_omega(g)
        vals.append(math.log2(w) / (g + w))
    assert np.all(np.diff(vals) <= 0)


# -- KKT ---------------------------------------------------------------------------


def test_kkt_constraint_inactive(ref03):
    out = solve(ref03, 0.1)
    rep = kkt_residuals(ref03, out)
    assert rep.multiplier == 0.0
    assert abs(rep.users[0].gradient) <= 1e-12
    assert rep.ok


def test_kkt_both_users_active_common_multiplier(ref08):
    out = solve(ref08, 1.5)
    rep = kkt_residuals(ref08, out)
    assert rep.multiplier > 0
    for u in rep.users:
        assert u.position == "interior"
        assert u.gradient == pytest.approx(u.gradient_fd, rel=1e-6)
        assert abs(u.residual) <= 1e-9
    assert rep.ok


def test_kkt_peak_limited_slack_nonnegative(ref08):
    out = solve(ref08, 2.6)
    rep = kkt_residuals(ref08, out)
    assert all(u.position == "upper" for u in rep.users)
    assert all(u.residual >= -1e-9 for u in rep.users)


# -- invariants over random scenarios -------------------------------------------------

passive = st.floats(0.02, 1.0)
gains = st.floats(0.05, 3.0)


@st.composite
def scenarios(draw):
    h = (draw(gains), draw(gains))
    g = (draw(passive), draw(passive))
    p_max = (draw(st.floats(0.2, 4.0)), draw(st.floats(0.2, 4.0)))
    pc = draw(st.floats(0.05, 2.0))
    sigma = draw(st.sampled_from([0.0, 0.0, 0.01]))
    return Scenario.from_arrays(h, g, p_max, (pc / 2, pc / 2), sigma)


@settings(max_examples=150, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(scenarios(), st.floats(0.0, 1.0))
def test_solution_invariants(s, frac):
    th = thresholds(s)
    assert 0 <= th.chi_star <= th.chi_prime <= th.chi_max + 1e-12
    chi = frac * th.chi_max
    out = solve(s, chi, th)
    p = out.alloc.p
    assert all(0.0 <= p[k] <= s.users[k].p_max for k in range(2))
    assert out.harvested >= chi - 1e-9
    assert out.multiplier >= 0.0
    assert abs(out.multiplier * (out.harvested - chi)) <= 1e-8
    if out.regime not in (Regime.CONSTRAINT_INACTIVE, Regime.PEAK_LIMITED) and chi > s.sigma_h_sq:
        assert out.harvested == pytest.approx(chi, abs=1e-9)
    if chi <= th.chi_prime - 1e-9 and "leader saturated, follower fills" not in out.flags:
        assert p[1 - th.leader] == 0.0
    assert kkt_residuals(s, out).ok


@settings(max_examples=40, suppress_health_check=[HealthCheck.too_slow], deadline=None)
@given(scenarios(), st.floats(0.0, 1.0))
def test_solver_never_beaten_by_oracle(s, frac):
    chi = frac * chi_max(s)
    out = solve(s, chi)
    ref = refined_search(s, chi, 100, 1)
    assert ref.eta <= out.eta + 1e-9
