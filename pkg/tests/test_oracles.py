import numpy as np
import pytest

from twoscale import PiecewiseConstantTarget, best_fit, heaviside, smooth_sigmoid
from twoscale.oracles import (
    OracleReport,
    adaptive_simpson,
    fd_gradient,
    format_report_table,
    grid_least_squares,
    lemma_suite,
    reports_to_csv,
    riemann_integral,
    sample_admissible_positions,
)


def single_jump():
    return PiecewiseConstantTarget([0.0, 0.5, 1.0], [0.0, 1.0])


def test_fd_gradient_quadratic(rng):
    x = rng.standard_normal(5)
    grad = fd_gradient(lambda v: 0.5 * float(v @ v), x, 1e-6)
    np.testing.assert_allclose(grad, x, atol=1e-9)


def test_adaptive_simpson_polynomials():
    assert adaptive_simpson(lambda x: x**3, 0, 1) == pytest.approx(0.25, abs=1e-14)
    assert adaptive_simpson(np.sin, 0, np.pi, tol=1e-13) == pytest.approx(2.0, abs=1e-11)
    # split points let it integrate a step exactly
    assert adaptive_simpson(single_jump(), 0, 1, points=[0.5]) == pytest.approx(0.5, abs=1e-13)


def test_riemann_integral():
    assert riemann_integral(lambda x: x, 0, 1, 1000) == pytest.approx(0.5, abs=1e-12)


def test_grid_least_squares_example():
    t = single_jump()
    a = grid_least_squares(np.array([0.3, 0.7]), t, heaviside(), 200_000)
    np.testing.assert_allclose(a, [0.0, 0.5, 0.5], atol=1e-4)
    # self-consistency between grid sizes
    a2 = grid_least_squares(np.array([0.3, 0.7]), t, heaviside(), 100_000)
    assert np.max(np.abs(a - a2)) <= 1e-4


def test_grid_least_squares_singular():
    with pytest.raises(ValueError, match="singular"):
        grid_least_squares(np.array([0.5, 0.5]), single_jump(), heaviside(), 1000)


def test_grid_least_squares_matches_closed_form(staircase, rng):
    act = smooth_sigmoid(1e-3)
    for _ in range(20):
        u = sample_admissible_positions(rng, 6, staircase, act.eta, min_per_piece=1)
        if np.min(u) < 0.02 or np.max(u) > 0.98:
            continue
        a = best_fit(u, act, staircase)
        g = grid_least_squares(u, staircase, act, 200_000)
        assert np.max(np.abs(a - g)) <= 5e-4


def test_report_formatting(tmp_path):
    reports = [
        OracleReport("alpha", 1.0, 1.0, 1e-9, True),
        OracleReport("beta", 2.0, 1.0, 1e-9, False),
    ]
    table = format_report_table(reports)
    assert "alpha" in table and "FAIL" in table
    path = tmp_path / "r.csv"
    reports_to_csv(reports, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0].startswith("name,computed")
    assert len(lines) == 3


def test_lemma_suite_small_run():
    reports = lemma_suite(np.random.default_rng(123), trials=40)
    assert len(reports) >= 10
    failing = [r.name for r in reports if not r.passed]
    assert failing == []
