# -*- coding: utf-8 -*-
import h5py
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.polynomial import Polynomial
from scipy.optimize import bisect

from _base import ChecksumError
from allen_cahn import (
    ContinuationConfig,
    PhasePartition,
    Potential,
    RhoTooLargeError,
    ScalarField,
    SolverDivergedError,
    action,
    action_values,
    classify_phases,
    comparison_check,
    continue_from_seed,
    laplacian,
    laplacian_all,
    local_minimality_certificate,
    minmax_check,
    quasi_newton_step,
    residual_all,
    solve_dirichlet,
    two_valued,
)
from cayley import GroupSpec, RimError, boundary_full, build_ball, inner_set

RHO = 0.00025


def a_subtree(ball):
    return np.array([len(w) > 0 and w[0] == 0 for w in ball.words])


@pytest.fixture(scope="module")
def quartic():
    return Potential.quartic()


@pytest.fixture(scope="module")
def seed5(f2_ball5, quartic):
    return two_valued(f2_ball5, a_subtree(f2_ball5), quartic)


@pytest.fixture(scope="module")
def solved5(f2_ball5, seed5, quartic):
    return solve_dirichlet(f2_ball5, seed5, f2_ball5.ball_mask(3), RHO, quartic, tol=1e-12)


def test_quartic_constants(quartic):
    assert quartic.c0 == pytest.approx(-1.0)
    assert quartic.c1 == pytest.approx(1.0)
    assert quartic.hat_c == pytest.approx(2.0)
    assert quartic.lipschitz_V2 == pytest.approx(12.0)
    assert quartic.saddle_gap == pytest.approx(0.25)
    config = ContinuationConfig.from_potential(quartic, 4)
    assert config.sigma0 == pytest.approx(1 / 24)
    assert config.c_tilde == pytest.approx(8 * (2 + 1 / 12))
    assert config.rho0 == pytest.approx(0.0025)
    assert config.rho1 == pytest.approx(0.0025)


def test_contraction_constant_range(quartic):
    with pytest.raises(ValueError):
        ContinuationConfig.from_potential(quartic, 4, k=1.0)


def test_shifted_potential():
    shifted = Potential(((Polynomial([-2.0, 1.0]) ** 2 - 1) ** 2 / 4).coef)
    assert shifted.c0 == pytest.approx(1.0)
    assert shifted.c1 == pytest.approx(3.0)
    assert shifted.hat_c == pytest.approx(2.0)


@pytest.mark.parametrize(
    "coefficients",
    [
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 0.0, 0.0, 1.0],
        [0.25, 0.0, -0.5, 0.0, -0.25],
        [0.0, 0.1, -0.5, 0.0, 0.25],
    ],
)
def test_rejected_potentials(coefficients):
    with pytest.raises(ValueError):
        Potential(coefficients)


def test_site_minimize_ties(quartic):
    zero = np.zeros(2)
    y = quartic.site_minimize(zero, zero, np.array([0.3, -0.2]))
    np.testing.assert_allclose(y, [1.0, -1.0])


@settings(max_examples=50, deadline=None)
@given(st.floats(0.0, 0.1), st.floats(-0.2, 0.2))
def test_site_minimize_is_global(a, b):
    pot = Potential.quartic()
    y = pot.site_minimize(np.array([a]), np.array([b]), np.array([0.0]))[0]
    grid = np.linspace(-2, 2, 40001)
    energy = 0.5 * a * grid**2 - b * grid + pot.value(grid)
    assert 0.5 * a * y**2 - b * y + pot.value(y) <= energy.min() + 1e-12


def test_laplacian(f2_ball3):
    field = ScalarField(f2_ball3, f2_ball3.lengths.astype(float), 1.0)
    assert laplacian(field, 0) == 4.0
    assert laplacian(field, 1) == 2.0
    with pytest.raises(RimError):
        laplacian(field, f2_ball3.size - 1)
    assert np.isnan(laplacian_all(f2_ball3, field.values)[-1])


def test_action(f2_ball3, quartic):
    B = f2_ball3.sphere_mask(0)
    field = ScalarField(f2_ball3, f2_ball3.lengths.astype(float), 1.0)
    assert action(field, B) == pytest.approx(1.25)
    assert action(field.with_values(np.ones(f2_ball3.size)), f2_ball3.internal) == 0.0
    with pytest.raises(RimError):
        action(field, np.ones(f2_ball3.size, dtype=bool))


def test_field_validation(f2_ball3):
    with pytest.raises(ValueError):
        ScalarField(f2_ball3, np.zeros(3), 0.1)
    with pytest.raises(ValueError):
        ScalarField(f2_ball3, np.full(f2_ball3.size, np.nan), 0.1)
    with pytest.raises(ValueError):
        ScalarField(f2_ball3, np.zeros(f2_ball3.size), -0.1)


def test_solve_dirichlet(f2_ball5, seed5, solved5):
    res = solved5
    field = res.field
    free = f2_ball5.ball_mask(3)
    assert res.trace[-1] < 1e-12
    assert np.all(np.diff(res.actions) <= 1e-12)
    np.testing.assert_array_equal(field.values[~free], seed5[~free])
    assert np.abs(residual_all(f2_ball5, field.values, RHO, field.pot)[free]).max() < 1e-12
    assert local_minimality_certificate(field, free).passed
    assert np.all(field.values >= -1.0 - 1e-12) and np.all(field.values <= 1.0 + 1e-12)
    np.testing.assert_array_equal(field.frozen, ~free)


def test_jacobi_agrees(f2_ball5, seed5, solved5, quartic):
    jacobi = solve_dirichlet(
        f2_ball5, seed5, f2_ball5.ball_mask(3), RHO, quartic, tol=1e-12, mode="jacobi"
    )
    np.testing.assert_allclose(jacobi.field.values, solved5.field.values, atol=1e-9)


def test_solver_errors(f2_ball5, seed5, quartic):
    free = f2_ball5.ball_mask(3)
    with pytest.raises(RimError):
        solve_dirichlet(f2_ball5, seed5, f2_ball5.ball_mask(5), RHO, quartic)
    bad = seed5.copy()
    bad[f2_ball5.sphere_offsets[4]] = 2.0
    with pytest.raises(ValueError):
        solve_dirichlet(f2_ball5, bad, free, RHO, quartic)
    with pytest.raises(ValueError):
        solve_dirichlet(f2_ball5, seed5, free, RHO, quartic, mode="sor")
    with pytest.raises(SolverDivergedError) as info:
        solve_dirichlet(f2_ball5, seed5, free, RHO, quartic, tol=1e-12, max_sweeps=0)
    assert len(info.value.trace) == 1


def test_non_tree_solve(z2z3_ball, quartic):
    D0 = np.array([len(w) > 0 and w[0] == 0 for w in z2z3_ball.words])
    seed = two_valued(z2z3_ball, D0, quartic)
    free = z2z3_ball.ball_mask(7)
    res = solve_dirichlet(z2z3_ball, seed, free, RHO, quartic, tol=1e-12)
    assert res.trace[-1] < 1e-12
    assert local_minimality_certificate(res.field, free).passed


def test_continuation(f2_ball5, seed5, solved5, quartic):
    config = ContinuationConfig.from_potential(quartic, 4)
    region = f2_ball5.ball_mask(3)
    res = continue_from_seed(f2_ball5, seed5, RHO, region, config, quartic)
    assert res.iterations >= 2
    assert np.abs(res.field.values - seed5).max() <= config.sigma0
    big = [s for s in res.steps if s > 1e-14]
    assert all(b <= 0.5 * a + 1e-12 for a, b in zip(big, big[1:]))
    np.testing.assert_allclose(res.field.values, solved5.field.values, atol=1e-9)


def test_continuation_rejections(f2_ball5, seed5, quartic):
    config = ContinuationConfig.from_potential(quartic, 4)
    region = f2_ball5.ball_mask(3)
    with pytest.raises(RhoTooLargeError):
        continue_from_seed(f2_ball5, seed5, 0.01, region, config, quartic)
    off = seed5.copy()
    off[0] = 0.5
    with pytest.raises(ValueError):
        continue_from_seed(f2_ball5, off, RHO, region, config, quartic)


def test_saddle_seed_continues(f2_ball5, quartic):
    config = ContinuationConfig.from_potential(quartic, 4, include_saddles=True)
    minima = ContinuationConfig.from_potential(quartic, 4)
    seed = two_valued(f2_ball5, a_subtree(f2_ball5), quartic)
    seed[0] = 0.0
    res = continue_from_seed(f2_ball5, seed, config.rho0, f2_ball5.ball_mask(3), config, quartic)
    assert abs(res.field.values[0]) <= config.sigma0
    # the continued saddle value is a middle-band site for the minima bands
    partition = classify_phases(res.field, minima.sigma0)
    assert partition.middle[0]
    assert partition.violations >= 1


def test_large_rho_fills_middle_band(f2_ball5, seed5, quartic):
    minima = ContinuationConfig.from_potential(quartic, 4)
    rho = 1.0
    assert rho > minima.rho1
    free = f2_ball5.ball_mask(3)
    res = solve_dirichlet(f2_ball5, seed5, free, rho, quartic, tol=1e-12)
    partition = classify_phases(res.field, minima.sigma0)
    assert partition.middle[0]
    assert partition.violations >= 2


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_minmax_inequality(seed):
    ball = build_ball(GroupSpec.free_group(2), 3)
    rng = np.random.default_rng(seed)
    x = rng.uniform(-1, 1, ball.size)
    y = rng.uniform(-1, 1, ball.size)
    assert minmax_check(ball, x, y, ball.internal, 0.01, Potential.quartic()) >= -1e-12


def test_comparison_labels(f2_ball5):
    B = f2_ball5.ball_mask(2)
    interior = np.flatnonzero(inner_set(f2_ball5, B, allow_rim=True))
    x = np.full(f2_ball5.size, -1.0)
    assert comparison_check(f2_ball5, x, x, B) == "identical"
    above = x.copy()
    above[interior] += 0.5
    assert comparison_check(f2_ball5, x, above, B) == "strictly_ordered"
    # one inner site where the fields touch
    touching = above.copy()
    touching[interior[0]] = x[interior[0]]
    assert comparison_check(f2_ball5, x, touching, B) == "violation"
    # equal inside, different on the rim
    rim_only = x.copy()
    rim_only[boundary_full(f2_ball5, B)] += 0.5
    assert comparison_check(f2_ball5, x, rim_only, B) == "violation"
    flipped = x.copy()
    flipped[0] -= 1.0
    assert comparison_check(f2_ball5, x, flipped, f2_ball5.ball_mask(1)) == "violation"
    with pytest.raises(ValueError):
        comparison_check(f2_ball5, rim_only, x, B)


def test_comparison_of_ordered_boundaries(f2, quartic):
    # ρ = 1 makes the Dirichlet problem on B_2 strictly convex, so minimisers are unique
    ball = build_ball(f2, 4)
    B = ball.ball_mask(3)
    free = inner_set(ball, B)
    rng = np.random.default_rng(9)
    labels = []
    for trial in range(100):
        low = rng.uniform(-1.0, 0.98, ball.size)
        high = low if trial % 10 == 0 else low + rng.uniform(0.01, 0.02, ball.size)
        x = solve_dirichlet(ball, low, free, 1.0, quartic, tol=1e-12).field.values
        y = solve_dirichlet(ball, high, free, 1.0, quartic, tol=1e-12).field.values
        labels.append(comparison_check(ball, x, y, B, atol=1e-9))
    assert labels.count("identical") == 10
    assert labels.count("strictly_ordered") == 90


def test_field_persistence(tmp_path, solved5):
    field = solved5.field
    first = field.save(str(tmp_path / "one.h5"))
    second = field.save(str(tmp_path / "two.h5"))
    with open(first, "rb") as f, open(second, "rb") as g:
        assert f.read() == g.read()
    loaded = ScalarField.load(first)
    np.testing.assert_array_equal(loaded.values, field.values)
    np.testing.assert_array_equal(loaded.frozen, field.frozen)
    assert loaded.rho == field.rho
    assert loaded.checksum == field.checksum
    assert loaded.pot.c0 == pytest.approx(-1.0)
    with h5py.File(second, "r+") as h5f:
        h5f["values"][0] += 1e-3
    with pytest.raises(ChecksumError):
        ScalarField.load(second)


def test_load_rejects_other_ball(tmp_path, solved5, f2_ball3):
    path = solved5.field.save(str(tmp_path / "field.h5"))
    with pytest.raises(ValueError):
        ScalarField.load(path, ball=f2_ball3)


def test_phase_partition(f2_ball3, quartic):
    D0 = a_subtree(f2_ball3)
    with pytest.raises(ValueError):
        PhasePartition(f2_ball3, D0, D0, f2_ball3.empty())
    field = ScalarField(f2_ball3, two_valued(f2_ball3, D0, quartic), RHO)
    partition = classify_phases(field, 1 / 24)
    np.testing.assert_array_equal(partition.D0, D0)
    assert partition.violations == 0
    assert partition.cut_edges() == [(0, 1)]
    assert partition.T.sum() == 2
    middle = field.with_values(np.where(D0, -1.0, 0.0))
    assert classify_phases(middle, 1 / 24).violations == int((~D0).sum())


def test_action_per_edge_weighting(f2_ball3, quartic):
    B = f2_ball3.ball_mask(1)
    zero = ScalarField(f2_ball3, np.zeros(f2_ball3.size), 0.5)
    assert action(zero, B, per_edge=True) == pytest.approx(B.sum() * 4 * 0.25)
    assert action(zero, B) == pytest.approx(B.sum() * 0.25)
    values = np.random.default_rng(3).uniform(-1, 1, f2_ball3.size)
    field = zero.with_values(values)
    extra = action(field, B, per_edge=True) - action(field, B)
    assert extra == pytest.approx(3 * quartic.value(values[B]).sum())


def test_action_gradient_is_minus_residual(f2_ball5, quartic):
    rng = np.random.default_rng(4)
    inner = np.flatnonzero(f2_ball5.ball_mask(3))
    rho, h = 0.1, 1e-5
    for _ in range(100):
        x = rng.uniform(-1.2, 1.2, f2_ball5.size)
        g = int(rng.choice(inner))
        B = f2_ball5.empty()
        B[g] = True
        B[f2_ball5.adjacency[g]] = True
        up, down = x.copy(), x.copy()
        up[g] += h
        down[g] -= h
        slope = action_values(f2_ball5, up, B, rho, quartic) - action_values(
            f2_ball5, down, B, rho, quartic
        )
        expected = -residual_all(f2_ball5, x, rho, quartic)[g]
        assert slope / (2 * h) == pytest.approx(expected, rel=1e-6, abs=1e-8)


def test_quasi_newton_step_contracts(f2_ball5, seed5, quartic):
    config = ContinuationConfig.from_potential(quartic, 4)
    region = f2_ball5.ball_mask(3)
    rng = np.random.default_rng(5)

    def near_seed():
        noise = rng.uniform(-config.sigma0, config.sigma0, f2_ball5.size)
        return seed5 + np.where(region, noise, 0.0)

    for _ in range(100):
        X, Y = near_seed(), near_seed()
        KX = quasi_newton_step(f2_ball5, X, seed5, region, config.rho0, quartic)
        KY = quasi_newton_step(f2_ball5, Y, seed5, region, config.rho0, quartic)
        assert np.abs(KX - KY).max() <= (config.k + 1e-6) * np.abs(X - Y).max()


def test_fixed_point_unique_in_sigma0_ball(f2_ball5, seed5, quartic):
    config = ContinuationConfig.from_potential(quartic, 4)
    region = f2_ball5.ball_mask(3)
    reference = continue_from_seed(f2_ball5, seed5, RHO, region, config, quartic).field.values
    rng = np.random.default_rng(6)
    for _ in range(5):
        noise = rng.uniform(-0.9 * config.sigma0, 0.9 * config.sigma0, f2_ball5.size)
        start = seed5 + np.where(region, noise, 0.0)
        res = continue_from_seed(f2_ball5, seed5, RHO, region, config, quartic, start=start)
        np.testing.assert_allclose(res.field.values, reference, atol=1e-11)


def test_continuation_tends_to_seed(f2_ball8, quartic):
    config = ContinuationConfig.from_potential(quartic, 4)
    seed = two_valued(f2_ball8, a_subtree(f2_ball8), quartic)
    region = f2_ball8.ball_mask(7)
    gaps = []
    for j in range(4):
        res = continue_from_seed(f2_ball8, seed, config.rho0 / 10**j, region, config, quartic)
        gaps.append(np.abs(res.field.values - seed).max())
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    assert gaps[-1] < 1e-3


def test_single_site_matches_grid_search(f2, quartic):
    ball = build_ball(f2, 1)
    free = ball.ball_mask(0)
    grid = np.linspace(-1.5, 1.5, 30001)
    rng = np.random.default_rng(7)
    for _ in range(20):
        rho = float(rng.choice([0.01, 0.1, 1.0]))
        values = rng.uniform(-1.0, 1.0, ball.size)
        nbrs = values[ball.adjacency[0]]

        def slope(y):
            return rho * np.sum(y - nbrs) + float(quartic.first(y))

        energy = 0.5 * rho * np.sum((grid[:, None] - nbrs) ** 2, axis=1) + quartic.value(grid)
        k = int(np.argmin(energy))
        expected = bisect(slope, grid[k - 1], grid[k + 1], xtol=1e-12)
        res = solve_dirichlet(ball, values, free, rho, quartic, tol=1e-12)
        assert res.field.values[0] == pytest.approx(expected, abs=1e-4)
