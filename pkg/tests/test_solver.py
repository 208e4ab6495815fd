import math

import mpmath
import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from smpstop import (
    ContractionError,
    PointMass,
    TimeGrid,
    Uniform,
    ValueGrid,
    apply_G,
    contraction_factor,
    cross_check,
    eps_region,
    exactness_gap,
    iteration_budget,
    read_region_csv,
    read_value_csv,
    solve_value,
    stopping_region,
    write_region_csv,
    write_value_csv,
)
from smpstop.grid import discretize_kernel
from smpstop.solver import _g_sweep
from conftest import make_random_model, single_state_model

EXP1 = 1.0 - math.exp(-1.0)


def zeros(model, grid) -> ValueGrid:
    return ValueGrid(grid=grid, values=np.zeros((grid.steps + 1, len(model.states))))


def budget_oracle(beta: float, m_bound: float, eps: float) -> int:
    """High-precision re-evaluation of the iteration budget formula."""
    with mpmath.workdps(60):
        raw = (mpmath.log(mpmath.mpf(eps) * (1 - mpmath.mpf(beta))) - mpmath.log(mpmath.mpf(m_bound) + 1)) / mpmath.log(
            mpmath.mpf(beta)
        )
        return max(1, int(mpmath.ceil(raw)))


# ---------------------------------------------------------------------------
# one sweep


def test_apply_G_min_of_continuation_and_payoff(m1):
    grid = TimeGrid(1.0, 1024)
    out = apply_G(zeros(m1, grid), m1)
    assert out.values[-1, 0] == 0.5
    assert out.values[0, 0] == 0.0


def test_apply_G_zero_terminal_cost_clamps_to_zero():
    model = single_state_model(g=0.0)
    grid = TimeGrid(1.0, 64)
    v = ValueGrid(grid=grid, values=np.full((65, 1), 0.123))
    assert np.all(apply_G(v, model).values == 0.0)


# ---------------------------------------------------------------------------
# value iteration


def test_solve_value_m1_analytic(m1):
    grid = TimeGrid(1.0, 1024)
    v, report = solve_value(m1, grid, tol=1e-10)
    assert report.converged
    assert np.max(np.abs(v.values[:, 0] - np.minimum(grid.nodes, 0.5))) <= 5e-3
    assert np.all(v.values[0, :] == 0.0)
    assert np.all(v.values <= m1.costs.terminal[None, :])


def test_solve_value_trivial_models():
    grid = TimeGrid(1.0, 64)
    v, _ = solve_value(single_state_model(c=0.0), grid)
    assert np.all(v.values == 0.0)
    v, _ = solve_value(single_state_model(g=0.0), grid)
    assert np.all(v.values == 0.0)


def test_solve_value_m2_grid_refinement_oracle(m2):
    base = solve_value(m2, TimeGrid(1.0, 1024), tol=1e-10)[0].values[-1]
    half = solve_value(m2, TimeGrid(1.0, 2048), tol=1e-10)[0].values[-1]
    fine = solve_value(m2, TimeGrid(1.0, 1024 * 16), tol=1e-10)[0].values[-1]
    refinement_delta = np.abs(half - base).max()
    assert np.abs(fine - base).max() <= 8.0 * refinement_delta


def test_solve_value_monotone_and_contraction(m2):
    grid = TimeGrid(1.0, 256)
    kg = discretize_kernel(m2.kernel, grid)
    beta = contraction_factor(m2)
    v = np.zeros((grid.steps + 1, 2))
    diffs = []
    for _ in range(30):
        nxt = _g_sweep(m2, kg, v)
        assert np.all(nxt >= v)
        diffs.append(np.max(np.abs(nxt - v)))
        v = nxt
    for before, after in zip(diffs, diffs[1:]):
        assert after <= beta * before + 1e-12


def test_fixed_point_residual(m1, m2):
    for model in (m1, m2):
        grid = TimeGrid(model.horizon, 256)
        _, report = solve_value(model, grid, tol=1e-9)
        assert report.converged
        assert report.residual <= 1e-9


def test_budget_exhaustion_flagged(m2):
    grid = TimeGrid(1.0, 128)
    v, report = solve_value(m2, grid, tol=1e-12, max_iter=2)
    assert not report.converged
    assert report.iterations == 2
    assert v.values.shape == (129, 2)


# ---------------------------------------------------------------------------
# stopping regions


def test_stopping_region_m1_boundary(m1):
    grid = TimeGrid(1.0, 1024)
    v, _ = solve_value(m1, grid, tol=1e-10)
    region = stopping_region(v, m1)
    assert not region.member[0].any()
    assert region.boundary[0] is not None
    assert abs(region.boundary[0] - 0.5) <= grid.dt
    assert region.contains(1.0, 0)
    assert not region.contains(0.25, 0)
    assert not region.contains(0.0, 0)


def test_stopping_region_free_terminal_cost():
    model = single_state_model(g=0.0)
    grid = TimeGrid(1.0, 64)
    v, _ = solve_value(model, grid)
    region = stopping_region(v, model)
    assert region.member[1:, 0].all()
    assert not region.member[0, 0]
    assert region.boundary[0] == grid.nodes[1]


def test_stopping_region_never_stop_section(m2):
    grid = TimeGrid(1.0, 512)
    v, _ = solve_value(m2, grid, tol=1e-10)
    region = stopping_region(v, m2)
    # cheap running cost and expensive terminal cost: state b never stops
    assert not region.member[:, 1].any()
    assert region.boundary[1] is None
    assert region.boundary[0] is not None


# ---------------------------------------------------------------------------
# iteration budgets


def synthetic_half_contraction():
    # uniform sojourn on (0, 2) puts exactly half the jump mass inside T = 1
    return single_state_model(c=4.0, g=5.0, dist=Uniform(0.0, 2.0))


def test_budget_formula_exact_synthetic():
    budget = iteration_budget(synthetic_half_contraction(), 0.01)
    assert budget.beta == 0.5
    assert budget.bound == 9.0
    assert budget.n_iter == 11
    assert budget.n_iter == budget_oracle(0.5, 9.0, 0.01)


def test_budget_clamps_to_one_sweep():
    budget = iteration_budget(synthetic_half_contraction(), 20.0)
    assert budget.n_iter == 1


def test_budget_m1_matches_high_precision(m1):
    budget = iteration_budget(m1, 0.01)
    assert budget.beta == pytest.approx(EXP1, abs=1e-15)
    assert budget.bound == 1.5
    assert budget.n_iter == budget_oracle(budget.beta, budget.bound, 0.01)


def test_budget_rejects_non_contractive():
    model = single_state_model(dist=PointMass(0.5))  # jump certain within T = 1
    with pytest.raises(ContractionError):
        iteration_budget(model, 0.01)


def test_budget_zero_beta():
    model = single_state_model(dist=PointMass(2.0))
    assert iteration_budget(model, 0.01).n_iter == 1


@settings(max_examples=40)
@given(st.floats(1.05, 20.0), st.floats(0.1, 5.0), st.floats(0.2, 5.0), st.floats(1e-5, 0.5))
def test_budget_matches_high_precision_oracle(b, c, g, eps):
    model = single_state_model(c=c, g=g, dist=Uniform(0.0, b))
    budget = iteration_budget(model, eps)
    assert 0.0 < budget.beta < 1.0
    with mpmath.workdps(60):
        raw = (mpmath.log(mpmath.mpf(eps) * (1 - mpmath.mpf(budget.beta))) - mpmath.log(mpmath.mpf(budget.bound) + 1)) / mpmath.log(mpmath.mpf(budget.beta))
        assume(abs(raw - mpmath.nint(raw)) > 1e-9)  # keep away from ceiling edges
    assert budget.n_iter == budget_oracle(budget.beta, budget.bound, eps)


# ---------------------------------------------------------------------------
# eps regions and the exactness gap


def test_eps_region_close_to_optimal(m1):
    grid = TimeGrid(1.0, 1024)
    v, _ = solve_value(m1, grid, tol=1e-12)
    exact_region = stopping_region(v, m1)
    result = eps_region(m1, grid, 0.01)
    mismatch = exact_region.member ^ result.region.member
    rows = np.flatnonzero(mismatch[:, 0])
    assert rows.size <= 1  # at most the boundary node


def test_eps_region_single_sweep_budget(m1):
    grid = TimeGrid(1.0, 256)
    result = eps_region(m1, grid, 100.0)
    assert result.budget.n_iter == 1
    kg = discretize_kernel(m1.kernel, grid)
    one = _g_sweep(m1, kg, np.zeros((257, 1)))
    np.testing.assert_array_equal(result.iterate.values, one)
    np.testing.assert_array_equal(result.refined.values, _g_sweep(m1, kg, one))


def test_eps_region_free_terminal_cost():
    model = single_state_model(g=0.0)
    result = eps_region(model, TimeGrid(1.0, 64), 0.01)
    assert result.region.member[1:, 0].all()
    assert exactness_gap(model, result.region, result.refined) == math.inf


def test_exactness_gap_positive_off_boundary(m1):
    grid = TimeGrid(1.0, 1024)
    result = eps_region(m1, grid, 0.01)
    gap = exactness_gap(m1, result.region, result.refined)
    assert gap > 0.0
    # verdict consistency: no exactness claim unless the margin beats eps
    assert (gap > 0.01) == bool(gap > result.budget.eps)


def test_eps_tail_bound(m1, m2):
    rng = np.random.default_rng(3)
    models = [m1, m2] + [make_random_model(rng) for _ in range(4)]
    for model in models:
        grid = TimeGrid(model.horizon, 128)
        eps = 0.01
        v, _ = solve_value(model, grid, tol=1e-9)
        result = eps_region(model, grid, eps)
        assert np.max(np.abs(v.values - result.refined.values)) <= eps + 1e-8


# ---------------------------------------------------------------------------
# cross-check and grid convergence


def test_cross_check_tiny(m1, m2):
    assert cross_check(m1, TimeGrid(1.0, 512), tol=1e-10) <= 1e-12
    assert cross_check(m2, TimeGrid(1.0, 512), tol=1e-10) <= 1e-12


def test_cross_check_zero_terminal():
    model = single_state_model(g=0.0)
    assert cross_check(model, TimeGrid(1.0, 64)) == 0.0


def test_cross_check_random_models():
    rng = np.random.default_rng(11)
    for _ in range(5):
        model = make_random_model(rng)
        assert cross_check(model, TimeGrid(model.horizon, 64)) <= 1e-12


def test_grid_convergence_ratio(m1, m2):
    for model in (m1, m2):
        ends = {}
        for steps in (256, 512, 1024):
            v, _ = solve_value(model, TimeGrid(model.horizon, steps), tol=1e-10)
            ends[steps] = v.values[-1].copy()
        first = np.abs(ends[512] - ends[256]).max()
        second = np.abs(ends[1024] - ends[512]).max()
        assert second <= 0.75 * first or (first == 0.0 and second == 0.0)


# ---------------------------------------------------------------------------
# CSV artifacts


def test_value_csv_round_trip(tmp_path, m2):
    grid = TimeGrid(1.0, 64)
    v, _ = solve_value(m2, grid)
    path = tmp_path / "value.csv"
    write_value_csv(v, m2.states, path)
    nodes, labels, values = read_value_csv(path)
    assert labels == m2.states.labels
    np.testing.assert_allclose(nodes, grid.nodes, rtol=1e-11, atol=1e-300)
    np.testing.assert_allclose(values, v.values, rtol=1e-11, atol=1e-300)


def test_region_csv_round_trip(tmp_path, m1):
    grid = TimeGrid(1.0, 128)
    v, _ = solve_value(m1, grid)
    region = stopping_region(v, m1)
    path = tmp_path / "region.csv"
    write_region_csv(region, m1.states, path)
    nodes, labels, member = read_region_csv(path)
    assert labels == m1.states.labels
    np.testing.assert_array_equal(member, region.member)
