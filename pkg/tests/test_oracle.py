import math

import numpy as np
import pytest
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from swiptmac import (
    InfeasibleEverywhere,
    Scenario,
    ScenarioError,
    chi_max,
    efficiency_net,
    grid_search,
    harvested_energy,
    refined_search,
    solve,
)


@pytest.fixture
def one_d():
    # h = 1, P_c = 1, second user without budget: optimum at e - 1 for chi = 0
    return Scenario.from_arrays((1.0, 0.0), (0.5, 0.5), (2.0, 0.0), (0.5, 0.5))


def test_one_dimensional_known_optimum(one_d):
    res = grid_search(one_d, 0.0, 10**6)
    assert res.alloc.p[1] == 0.0
    assert abs(res.alloc.p[0] - (math.e - 1)) <= 2e-6
    assert res.grid_step == (2e-6, 0.0)


def test_refined_one_dimensional(one_d):
    res = refined_search(one_d, 0.0, 100, 3)
    assert abs(res.alloc.p[0] - (math.e - 1)) <= 2e-5
    assert res.grid_step[0] == pytest.approx(2.0 / 100 / 1000)


def test_corner_is_only_point_at_chi_max(ref03):
    res = grid_search(ref03, chi_max(ref03), 50)
    assert res.alloc.p == (2.0, 2.0)


def test_infeasible_everywhere(ref03):
    with pytest.raises(InfeasibleEverywhere):
        grid_search(ref03, 1.7, 50)


def test_argument_checks(ref03):
    with pytest.raises(ScenarioError):
        grid_search(ref03, 0.1, 1)
    with pytest.raises(ScenarioError):
        refined_search(ref03, 0.1, 10, -1)


def test_refine_rounds_zero_is_grid_search(ref08):
    assert refined_search(ref08, 0.7, 80, 0) == grid_search(ref08, 0.7, 80)


def test_coarse_grid_close_to_closed_form(ref03):
    res = grid_search(ref03, 0.7, 2000)
    assert res.eta == pytest.approx(solve(ref03, 0.7).eta, abs=1e-3)


def test_result_is_feasible_and_consistent(ref08):
    for chi in np.linspace(0, chi_max(ref08), 13):
        res = refined_search(ref08, chi, 60, 1)
        assert harvested_energy(res.alloc, ref08) >= chi
        assert res.eta == efficiency_net(res.alloc, ref08, chi)
        assert res.feasible_points > 0


@pytest.mark.parametrize("chi", [0.0, 0.3, 0.7, 1.2, 1.5, 2.2])
def test_finer_lattice_never_loses(ref08, chi):
    etas = [grid_search(ref08, chi, n).eta for n in (25, 50, 100, 200, 400)]
    assert all(b >= a - 1e-12 for a, b in zip(etas, etas[1:]))


@settings(max_examples=30, deadline=None, suppress_health_check=[HealthCheck.too_slow])
@given(
    st.floats(0.05, 3.0), st.floats(0.05, 3.0), st.floats(0.02, 1.0), st.floats(0.02, 1.0),
    st.floats(0.1, 2.0), st.floats(0.0, 1.0),
)
def test_closed_form_is_never_beaten(h0, h1, g0, g1, pc, frac):
    s = Scenario.from_arrays((h0, h1), (g0, g1), (2.0, 2.0), (pc / 2, pc / 2))
    chi = frac * chi_max(s)
    assert grid_search(s, chi, 150).eta <= solve(s, chi).eta + 1e-9
