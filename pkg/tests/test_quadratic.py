import numpy as np
import pytest

from twoscale import (
    PiecewiseConstantTarget,
    best_fit,
    best_fit_heaviside,
    heaviside,
    hessian,
    linear_term,
    loss,
    min_eigenvalue,
    min_gap,
    reduced_loss,
    smooth_sigmoid,
    spacing,
    step_fit,
)
from twoscale.network import NetworkState, forward
from twoscale.oracles import grid_least_squares, riemann_integral, sample_admissible_positions
from twoscale.targets import sample_target, ClassParams


def single_jump():
    return PiecewiseConstantTarget([0.0, 0.5, 1.0], [0.0, 1.0])


# ---------------------------------------------------------------- spacing


def test_min_gap_includes_boundaries():
    assert min_gap(np.array([0.3, 0.7]), 0.01) == pytest.approx(0.305, abs=1e-15)
    assert min_gap(np.array([0.3, 0.31, 0.7]), 0.0) == pytest.approx(0.01, abs=1e-12)


def test_spacing_flanks():
    sp = spacing(np.array([0.2, 0.4, 0.6, 0.8]), 0.0, single_jump())
    assert sp.flanks == ((0.4, 0.6),)
    sp2 = spacing(np.array([0.6, 0.8]), 0.0, single_jump())
    assert sp2.flanks == ((None, 0.6),)


# ---------------------------------------------------------------- hessian


def test_hessian_step_limit_closed_form():
    H = hessian(np.array([0.3, 0.7]), heaviside())
    np.testing.assert_allclose(H, [[1.0, 0.7, 0.3], [0.7, 0.7, 0.3], [0.3, 0.3, 0.3]], atol=1e-15)


def test_hessian_offdiagonal_unchanged_by_eta():
    u = np.array([0.3, 0.7])
    H0 = hessian(u, heaviside())
    H = hessian(u, smooth_sigmoid(0.01))
    off = ~np.eye(3, dtype=bool)
    np.testing.assert_array_equal(H[off], H0[off])


def test_hessian_diag_correction_uniform(rng):
    eta = 0.01
    act = smooth_sigmoid(eta)
    t = single_jump()
    u = sample_admissible_positions(rng, 5, t, eta, min_per_piece=0)
    corr = np.diag(hessian(u, act) - hessian(u, heaviside()))
    assert corr[0] == 0.0
    assert np.all(corr[1:] >= -eta / 4) and np.all(corr[1:] <= 0.0)
    assert np.ptp(corr[1:]) <= 1e-15
    # same constant for any positions (up to cancellation in the subtraction)
    u2 = sample_admissible_positions(rng, 5, t, eta, min_per_piece=0)
    corr2 = np.diag(hessian(u2, act) - hessian(u2, heaviside()))
    np.testing.assert_allclose(corr[1:], corr2[1:], atol=1e-15)


def test_hessian_requires_admissible():
    with pytest.raises(ValueError, match="admissible"):
        hessian(np.array([0.5, 0.5 + 1e-4]), smooth_sigmoid(1e-3))


# ---------------------------------------------------------------- linear term


def test_linear_term_step_limit():
    b = linear_term(np.array([0.3, 0.7]), heaviside(), single_jump())
    np.testing.assert_allclose(b, [0.5, 0.5, 0.3], atol=1e-15)


def test_linear_term_equals_step_away_from_breakpoints(staircase, rng):
    eta = 1e-3
    act = smooth_sigmoid(eta)
    interior = staircase.interior_breakpoints
    for _ in range(50):
        u = sample_admissible_positions(rng, 6, staircase, eta, min_per_piece=0)
        clear = np.min(np.abs(u[:, None] - interior[None, :]), axis=1) > eta / 2
        b_eta = linear_term(u, act, staircase)
        b_0 = linear_term(u, heaviside(), staircase)
        np.testing.assert_array_equal(b_eta[1:][clear], b_0[1:][clear])


def test_linear_term_window_shift_bound(staircase, rng):
    # correlation shift is at most sup * eta per coordinate (l2 across m+1)
    sup = float(np.max(np.abs(staircase.values)))
    for _ in range(200):
        eta = float(rng.uniform(1e-4, 1e-2))
        u = sample_admissible_positions(rng, 6, staircase, eta, min_per_piece=0)
        gap = np.linalg.norm(
            linear_term(u, smooth_sigmoid(eta), staircase) - linear_term(u, heaviside(), staircase)
        )
        assert gap <= sup * eta * np.sqrt(7) + 1e-15


# ---------------------------------------------------------------- best fits


def test_best_fit_matches_step_closed_form():
    t = single_jump()
    a = best_fit(np.array([0.3, 0.7]), smooth_sigmoid(1e-3), t)
    np.testing.assert_allclose(a, [0.0, 0.5, 0.5], atol=5e-3)


def test_best_fit_requires_admissible():
    with pytest.raises(ValueError, match="admissible"):
        best_fit(np.array([0.5, 0.5 + 1e-4]), smooth_sigmoid(1e-3), single_jump())


def test_best_fit_heaviside_examples():
    t = single_jump()
    a = best_fit_heaviside(np.array([0.2, 0.3, 0.7, 0.8]), t)
    np.testing.assert_allclose(a, [0.0, 0.0, 0.5, 0.5, 0.0], atol=1e-15)
    a2 = best_fit_heaviside(np.array([0.2, 0.4, 0.6, 0.8]), t)
    np.testing.assert_allclose(a2, [0.0, 0.0, 0.5, 0.5, 0.0], atol=1e-15)


def test_best_fit_heaviside_matches_grid_oracle(staircase, rng):
    for _ in range(10):
        u = sample_admissible_positions(rng, 14, staircase, 0.0, min_per_piece=2)
        a = best_fit_heaviside(u, staircase)
        g = grid_least_squares(u, staircase, heaviside(), 200_000)
        assert np.max(np.abs(a - g)) <= 5e-4


def test_best_fit_heaviside_weight_bound(staircase, rng):
    sup = float(np.max(np.abs(staircase.values)))
    for _ in range(200):
        u = sample_admissible_positions(rng, 14, staircase, 0.0, min_per_piece=2)
        assert np.max(np.abs(best_fit_heaviside(u, staircase))) <= 2 * sup + 1e-12


def test_best_fit_heaviside_precondition():
    with pytest.raises(ValueError, match="need >= 2"):
        best_fit_heaviside(np.array([0.1, 0.2, 0.7]), single_jump())
    with pytest.raises(ValueError, match="distinct"):
        best_fit_heaviside(np.array([0.2, 0.2, 0.7, 0.8]), single_jump())


def test_step_fit_general_matches_flank_formula(staircase, rng):
    for _ in range(20):
        u = sample_admissible_positions(rng, 14, staircase, 0.0, min_per_piece=2)
        a_formula = best_fit_heaviside(u, staircase)
        a_cells, fit_loss = step_fit(u, staircase)
        np.testing.assert_allclose(a_cells, a_formula, atol=1e-12)
        assert fit_loss == pytest.approx(reduced_loss(u, staircase), abs=1e-12)


def test_step_fit_tolerates_breakpoint_and_duplicates(staircase):
    u = np.array([0.1, 0.15, 0.2, 0.2, 0.3, 0.4, 0.45, 0.55, 0.6, 0.7, 0.75, 0.9, 0.95])
    a, fit_loss = step_fit(u, staircase)
    # the first of the duplicated positions carries no weight and the loss is
    # still the exact cell residual
    dup = np.where(u == 0.2)[0]
    assert a[1:][dup[0]] == 0.0
    assert fit_loss >= 0.0


def test_sup_norm_of_step_fit(staircase, rng):
    act = smooth_sigmoid(1e-3)
    grid = np.linspace(0, 1, 3001)
    sup = float(np.max(np.abs(staircase.values)))
    for _ in range(30):
        u = sample_admissible_positions(rng, 14, staircase, 1e-3, min_per_piece=2)
        a = best_fit_heaviside(u, staircase)
        vals = forward(NetworkState(a, u), act, grid)
        assert np.max(np.abs(vals)) <= sup + 1e-9


# ---------------------------------------------------------------- loss


def test_loss_zero_network(staircase):
    u = np.array([0.1, 0.4, 0.9])
    expected = 0.5 * staircase.integral(0, 1, power=2)
    assert loss(np.zeros(4), u, smooth_sigmoid(1e-3), staircase) == pytest.approx(expected, abs=1e-14)


def test_loss_perfect_step_fit():
    t = single_jump()
    a = np.array([0.0, 1.0])
    u = np.array([0.5])
    assert loss(a, u, heaviside(), t) == pytest.approx(0.0, abs=1e-15)


def test_loss_matches_riemann(staircase, rng):
    act = smooth_sigmoid(4e-3)
    for _ in range(5):
        u = rng.random(6)  # arbitrary, possibly inadmissible
        a = rng.uniform(-3, 3, 7)
        state = NetworkState(a, u)
        ref = 0.5 * riemann_integral(
            lambda x: (forward(state, act, x) - staircase(x)) ** 2, 0.0, 1.0, 1_000_000
        )
        assert loss(a, u, act, staircase) == pytest.approx(ref, abs=1e-6)


def test_loss_quadratic_form_identity(staircase, rng):
    act = smooth_sigmoid(2e-3)
    c = 0.5 * staircase.integral(0, 1, power=2)
    for _ in range(20):
        u = sample_admissible_positions(rng, 8, staircase, act.eta, min_per_piece=0)
        a = rng.uniform(-3, 3, 9)
        H = hessian(u, act)
        b = linear_term(u, act, staircase)
        qf = 0.5 * a @ H @ a - b @ a + c
        assert loss(a, u, act, staircase) == pytest.approx(qf, abs=1e-12)


# ---------------------------------------------------------------- reduced loss


def test_reduced_loss_example():
    assert reduced_loss(np.array([0.2, 0.3, 0.7, 0.8]), single_jump()) == pytest.approx(0.05, abs=1e-15)


def test_reduced_loss_flank_on_breakpoint_contributes_zero():
    t = single_jump()
    val = reduced_loss(np.array([0.2, 0.5 - 1e-13, 0.7, 0.8]), t)
    assert val <= 1e-12


def test_reduced_loss_decreases_toward_breakpoint():
    t = single_jump()
    vals = [reduced_loss(np.array([0.2, uL, 0.7, 0.8]), t) for uL in np.linspace(0.25, 0.49, 12)]
    assert np.all(np.diff(vals) < 0)


def test_reduced_loss_is_heaviside_loss_at_best_fit(staircase, rng):
    for _ in range(20):
        u = sample_admissible_positions(rng, 14, staircase, 0.0, min_per_piece=2)
        a = best_fit_heaviside(u, staircase)
        assert reduced_loss(u, staircase) == pytest.approx(
            loss(a, u, heaviside(), staircase), abs=1e-10
        )


# ---------------------------------------------------------------- eigenvalues


def test_min_eigenvalue_identity():
    assert min_eigenvalue(np.eye(7)) == pytest.approx(1.0, abs=1e-12)


def test_min_eigenvalue_3x3_char_poly_oracle():
    H = hessian(np.array([0.3, 0.7]), heaviside())
    coeffs = np.poly(H)  # characteristic polynomial coefficients
    roots = np.roots(coeffs)
    assert min_eigenvalue(H) == pytest.approx(float(np.min(roots.real)), abs=1e-8)


def test_min_eigenvalue_large_matrix_inverse_power(rng):
    q, _ = np.linalg.qr(rng.standard_normal((80, 80)))
    lam = np.sort(rng.uniform(0.1, 5.0, 80))
    H = (q * lam) @ q.T
    H = 0.5 * (H + H.T)
    assert min_eigenvalue(H) == pytest.approx(lam[0], rel=1e-6)


def test_eigenvalue_floor(staircase, rng):
    for eta in (0.0, 1e-3):
        act = heaviside() if eta == 0.0 else smooth_sigmoid(eta)
        for _ in range(100):
            u = sample_admissible_positions(rng, 8, staircase, eta, min_per_piece=0)
            H = hessian(u, act)
            assert min_eigenvalue(H) >= min_gap(u, eta) / 8.0 - 1e-12


def test_best_fit_norm_bound(staircase, rng):
    sup = float(np.max(np.abs(staircase.values)))
    act = smooth_sigmoid(1e-3)
    for _ in range(100):
        u = sample_admissible_positions(rng, 8, staircase, act.eta, min_per_piece=0)
        a = best_fit(u, act, staircase)
        assert np.linalg.norm(a) <= 8 * sup * np.sqrt(9) / min_gap(u, act.eta) + 1e-9
