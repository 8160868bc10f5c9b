import io
import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from entlogdet.maxent import (
    Grid,
    GridDensity,
    MaxEntDensity,
    MaxEntError,
    density_to_json,
    entropy,
    kl_divergence,
    solve_maxent,
    total_variation,
    total_variation_bound,
    total_variation_norm_bound,
)


def exp2_on(grid: Grid) -> GridDensity:
    q = np.exp(-2.0 * grid.nodes)
    return GridDensity(q / (q.sum() * grid.dx), grid)


@pytest.fixture(scope="module")
def exp2_fit(grid, exp2_moments):
    return solve_maxent(exp2_moments[:5], grid, tol=1e-7)


@pytest.fixture(scope="module")
def exp2_sweep(grid, exp2_moments):
    return [solve_maxent(exp2_moments[: m + 1], grid)[1] for m in range(1, 9)]


def test_grid_validation():
    assert Grid().size == 1000
    nodes = Grid(0.01).nodes
    assert nodes[0] == pytest.approx(0.005) and nodes[-1] == pytest.approx(0.995)
    np.testing.assert_allclose(np.diff(nodes), 0.01)
    for bad in (0.0, -0.1, 0.02, 0.003):
        with pytest.raises(ValueError):
            Grid(bad)


def test_normalization_only_gives_uniform(grid):
    q, rep = solve_maxent([1.0], grid)
    assert rep.converged
    assert np.max(np.abs(q.values - 1.0)) < 1e-3
    assert abs(rep.entropy) < 1e-3


def test_half_mean_gives_uniform(grid):
    q, rep = solve_maxent([1.0, 0.5], grid)
    assert rep.converged
    assert abs(q.alphas[1]) < 1e-3
    assert np.max(np.abs(q.values - 1.0)) < 1e-3


def test_exp2_recovery(exp2_fit, exp2_density):
    q, rep = exp2_fit
    assert rep.converged and rep.residual <= 1e-6
    assert q.alphas[1] == pytest.approx(2.0, abs=0.05)
    assert np.all(np.abs(q.alphas[2:]) < 0.05)
    assert np.max(np.abs(q.values - exp2_density)) < 1e-3


def test_moment_fidelity_matches_report(exp2_fit):
    q, rep = exp2_fit
    resid = np.max(np.abs(q.moments(4) - q.target))
    assert resid == pytest.approx(rep.residual, rel=1e-9)


def test_entropy_identity(exp2_fit):
    q, rep = exp2_fit
    own = q.moments(q.num_moments)
    assert entropy(q) == pytest.approx(own[0] + q.alphas @ own, abs=1e-6)


def test_uniform_entropy_is_zero(grid):
    assert entropy(GridDensity(np.ones(grid.size), grid)) == pytest.approx(0.0, abs=1e-14)


def test_entropy_vs_refined_quadrature(grid):
    fine = entropy(exp2_on(Grid(1e-5)))
    assert entropy(exp2_on(grid)) == pytest.approx(fine, abs=1e-4)
    # closed form: log((1 - e^-2) / 2) + 1 - 2 e^-2 / (1 - e^-2)
    z = (1 - math.exp(-2)) / 2
    assert fine == pytest.approx(math.log(z) + 1 - 2 * math.exp(-2) / (1 - math.exp(-2)), abs=1e-8)


def test_zero_cells_contribute_nothing(grid):
    v = np.zeros(grid.size)
    v[: grid.size // 2] = 2.0
    assert entropy(GridDensity(v, grid)) == pytest.approx(-math.log(2.0))


def test_entropy_monotone_in_moment_count(exp2_sweep):
    s = [r.entropy for r in exp2_sweep]
    assert all(b <= a + 1e-4 for a, b in zip(s, s[1:])), s


def test_grid_refinement_stability(exp2_moments):
    coarse, rc = solve_maxent(exp2_moments[:4], Grid(1e-3), tol=1e-8)
    fine_grid = Grid(1e-4)
    fine_mu = fine_grid.powers(3) @ exp2_on(fine_grid).values * fine_grid.dx
    fine, rf = solve_maxent(fine_mu, fine_grid, tol=1e-8)
    assert rc.converged and rf.converged
    assert abs(rc.entropy - rf.entropy) < 1e-3
    assert abs(coarse.mean_log() - fine.mean_log()) < 1e-3


def test_warm_start_zero_pads(grid, exp2_moments):
    q3, _ = solve_maxent(exp2_moments[:4], grid)
    q4, rep = solve_maxent(exp2_moments[:5], grid, initial=q3.alphas)
    assert rep.converged and q4.alphas.size == 5


def test_random_start_is_reproducible(grid):
    mu = [1.0, 0.4, 0.25]
    a, _ = solve_maxent(mu, grid, seed=3)
    b, _ = solve_maxent(mu, grid, seed=3)
    np.testing.assert_array_equal(a.alphas, b.alphas)


def test_nonconvergence_returns_best_iterate(grid, exp2_moments):
    q, rep = solve_maxent(exp2_moments[:5], grid, tol=1e-12, max_iters=5)
    assert not rep.converged and rep.iterations == 5
    assert np.all(np.isfinite(q.values)) and rep.residual > 1e-12


def test_input_validation(grid):
    with pytest.raises(ValueError, match="zeroth"):
        solve_maxent([0.9, 0.5], grid)
    with pytest.raises(ValueError, match="positive"):
        solve_maxent([1.0, -0.1], grid)


def test_nonmonotone_moments_warn(grid, caplog):
    solve_maxent([1.0, 0.3, 0.35], grid, max_iters=10)
    assert "nonincreasing" in caplog.text


def test_overflow_names_the_multiplier(grid):
    # wildly infeasible moments push one update past the float range
    with pytest.raises(MaxEntError, match=r"alpha\[[12]\]"):
        solve_maxent([1.0, 1e-300, 1e300], grid, max_iters=1000)


def test_exponent_clamp_flags_nonconvergence(grid):
    q = MaxEntDensity.from_alphas([-710.0], grid)
    np.testing.assert_array_equal(q.values, math.exp(700.0))
    # one cycle from a clamped start leaves a finite, unconverged fit
    _, rep = solve_maxent([1.0, 0.5], grid, max_iters=1, initial=[-800.0, 0.0], tol=10.0)
    assert np.isfinite(rep.residual)


def test_kl_self_is_zero(grid, exp2_density):
    p = GridDensity(exp2_density, grid)
    assert kl_divergence(p, p) == 0.0


def test_kl_uniform_vs_exp2(grid):
    u = GridDensity(np.ones(grid.size), grid)
    fine = Grid(1e-5)
    oracle = kl_divergence(GridDensity(np.ones(fine.size), fine), exp2_on(fine))
    assert kl_divergence(u, exp2_on(grid)) == pytest.approx(oracle, abs=1e-4)
    assert oracle == pytest.approx(math.log((1 - math.exp(-2)) / 2) + 1, abs=1e-8)


def test_kl_infinite_and_mismatch(grid):
    p = GridDensity(np.ones(grid.size), grid)
    v = np.full(grid.size, 2.0)
    v[: grid.size // 2] = 0.0
    assert kl_divergence(p, GridDensity(v, grid)) == math.inf
    assert kl_divergence(GridDensity(v, grid), p) == pytest.approx(math.log(2))
    with pytest.raises(ValueError, match="grid"):
        kl_divergence(p, GridDensity(np.ones(100), Grid(0.01)))


def test_kl_equals_entropy_difference_for_maxent_fit(grid):
    # p: a bimodal density; q: MaxEnt fit to p's own first three moments
    x = grid.nodes
    p = np.exp(-((x - 0.25) ** 2) / 0.01) + 0.5 * np.exp(-((x - 0.7) ** 2) / 0.02)
    p = GridDensity(p / (p.sum() * grid.dx), grid)
    q, rep = solve_maxent(p.moments(3), grid, tol=1e-8)
    assert rep.converged
    assert kl_divergence(p, q) == pytest.approx(entropy(q) - entropy(p), abs=1e-3)


def test_pinsker_examples(grid):
    assert total_variation_bound(0.0) == 0.0
    assert total_variation_bound(0.02) == pytest.approx(0.1)
    assert total_variation_norm_bound(0.02) == pytest.approx(0.2)
    with pytest.raises(ValueError):
        total_variation_bound(-0.1)
    u, e = GridDensity(np.ones(grid.size), grid), exp2_on(grid)
    assert total_variation(u, e) <= total_variation_bound(kl_divergence(u, e))


@st.composite
def grid_densities(draw, size=100):
    w = draw(st.lists(st.floats(1e-6, 10.0), min_size=size, max_size=size))
    v = np.asarray(w)
    return v / (v.sum() * 0.01)


@settings(max_examples=60, deadline=None)
@given(grid_densities(), grid_densities())
def test_gibbs_and_pinsker_on_random_pairs(pv, qv):
    g = Grid(0.01)
    p, q = GridDensity(pv, g), GridDensity(qv, g)
    kl = kl_divergence(p, q)
    assert kl >= -1e-12
    assert total_variation(p, q) <= total_variation_bound(kl) + 1e-12


def test_json_and_csv_export(exp2_fit):
    q, rep = exp2_fit
    doc = json.loads(density_to_json(q, rep))
    assert set(doc) == {"alphas", "dx", "entropy", "residual", "converged"}
    assert doc["dx"] == 0.001 and len(doc["alphas"]) == 5 and doc["converged"] is True
    buf = io.StringIO()
    q.to_csv(buf)
    lines = buf.getvalue().splitlines()
    assert lines[0] == "x,q" and len(lines) == 1001
    x0, q0 = map(float, lines[1].split(","))
    assert x0 == pytest.approx(0.0005) and q0 == q.values[0]
