import numpy as np
import pytest
from scipy import stats

from twoscale import (
    PiecewiseConstantTarget,
    estimate_good_probability,
    is_spread_good,
    sample_init,
)
from twoscale.initialization import piece_counts, wilson_interval


def single_jump():
    return PiecewiseConstantTarget([0.0, 0.5, 1.0], [0.0, 1.0])


def test_sample_init_zero_weights_and_determinism():
    a, u = sample_init(20, np.random.default_rng(7))
    assert a.shape == (21,) and np.all(a == 0.0)
    assert u.shape == (20,) and np.all((u >= 0) & (u <= 1))
    a2, u2 = sample_init(20, np.random.default_rng(7))
    np.testing.assert_array_equal(u, u2)
    with pytest.raises(ValueError):
        sample_init(0, np.random.default_rng(0))


def test_sample_init_uniformity_ks():
    rng = np.random.default_rng(11)
    pooled = np.concatenate([sample_init(100, rng)[1] for _ in range(1000)])
    assert pooled.size == 100_000
    result = stats.kstest(pooled, "uniform")
    assert result.pvalue >= 0.01


def test_piece_counts_breakpoint_counts_both_sides():
    t = single_jump()
    counts = piece_counts(np.array([0.1, 0.5, 0.9]), t)
    np.testing.assert_array_equal(counts, [2, 2])


def test_spread_good_count_condition(staircase):
    rng = np.random.default_rng(0)
    # plenty of neurons but piled into one piece
    u = rng.uniform(0.0, 0.19, 40)
    report = is_spread_good(u, staircase, D=1e-6, eta=0.0)
    assert not report.is_good and not report.count_ok
    assert any("holds" in w for w in report.witnesses)


def test_spread_good_symmetric_flanks_fail_condition_c():
    t = single_jump()
    offsets = np.linspace(0.05, 0.3, 6)
    u = np.sort(np.concatenate((0.5 - offsets, 0.5 + offsets)))
    report = is_spread_good(u, t, D=1e-12, eta=0.0)
    assert report.count_ok
    assert not report.asymmetry_ok and not report.is_good


def test_spread_good_passes():
    t = single_jump()
    u = np.array([0.05, 0.15, 0.22, 0.3, 0.38, 0.45, 0.58, 0.66, 0.74, 0.82, 0.9, 0.97])
    report = is_spread_good(u, t, D=0.01, eta=0.0)
    assert report.is_good and bool(report)
    assert report.witnesses == ()


def test_estimate_good_probability_degenerate_D(staircase):
    rng = np.random.default_rng(5)
    freq, lo, hi = estimate_good_probability(40, staircase, 0.0, 0.0, 2000, rng)
    # with D = 0 the spacing and asymmetry conditions are vacuous
    rng2 = np.random.default_rng(5)
    manual = np.mean(
        [np.all(piece_counts(rng2.random(40), staircase) >= 6) for _ in range(2000)]
    )
    # the vectorized estimator and the loop see the same draws
    assert freq == pytest.approx(manual, abs=1e-12)
    assert lo <= freq <= hi


def test_estimate_good_probability_too_few_neurons():
    t = single_jump()
    freq, _, hi = estimate_good_probability(1, t, 0.0, 0.0, 500, np.random.default_rng(0))
    assert freq == 0.0
    assert hi < 0.02


def test_wilson_interval_known_value():
    lo, hi = wilson_interval(50, 100)
    assert lo == pytest.approx(0.40383, abs=1e-4)
    assert hi == pytest.approx(0.59617, abs=1e-4)


def test_neuron_budget_guarantees_certificate(staircase):
    # With the prescribed neuron budget m >= (6 / min piece)(4 + log n + log 1/delta)
    # and D = delta / (6 (m+1)^2), uniform positions are certified with
    # probability at least 1 - delta (checked up to the Wilson half-width).
    trials = 10_000
    for delta in (0.5, 0.25):
        for target in (single_jump(), staircase):
            n = target.n_pieces
            dv = float(np.min(np.diff(target.breakpoints)))
            m = int(np.ceil(6.0 / dv * (4.0 + np.log(n) + np.log(1.0 / delta))))
            D = delta / (6.0 * (m + 1) ** 2)
            freq, _, _ = estimate_good_probability(
                m, target, D, 0.0, trials, np.random.default_rng(7)
            )
            lo, hi = wilson_interval(int(round(freq * trials)), trials)
            assert freq >= (1.0 - delta) - (hi - lo) / 2.0, (delta, n, m, freq)


def test_spread_good_vectorized_consistency(staircase):
    # scalar certificate and vectorized estimator agree trial by trial
    m, D, eta = 30, 5e-3, 1e-3
    trials = 300
    rng = np.random.default_rng(42)
    us = np.sort(rng.random((trials, m)), axis=1)
    scalar = np.array(
        [is_spread_good(row, staircase, D, eta, min_per_piece=2).is_good for row in us]
    )
    freq, _, _ = estimate_good_probability(
        m, staircase, D, eta, trials, np.random.default_rng(42), min_per_piece=2
    )
    assert freq == pytest.approx(scalar.mean(), abs=1e-12)
