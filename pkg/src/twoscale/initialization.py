"""Initialization sampling and the spread-out certificate.

The certificate checks three conditions on a position vector relative to a
staircase target: enough neurons in every closed piece, a minimum pairwise
gap (with the virtual boundary positions), and a minimum asymmetry of the two
flanking neurons around every discontinuity.  A Monte-Carlo estimator reports
how often uniform initializations are certified, with a Wilson interval.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .quadratic import min_gap
from .targets import PiecewiseConstantTarget

__all__ = ["GoodnessReport", "sample_init", "is_spread_good", "estimate_good_probability"]

_Z95 = 1.959963984540054  # two-sided 95% normal quantile


@dataclass(frozen=True)
class GoodnessReport:
    is_good: bool
    count_ok: bool
    gap_ok: bool
    asymmetry_ok: bool
    witnesses: tuple

    def __bool__(self) -> bool:
        return self.is_good


def sample_init(m: int, rng: np.random.Generator):
    """Zero weights (bias included) and i.i.d. uniform positions."""
    if m < 1:
        raise ValueError("need at least one neuron")
    return np.zeros(m + 1), rng.random(m)


def piece_counts(u: np.ndarray, target: PiecewiseConstantTarget) -> np.ndarray:
    """Neurons per closed piece; one sitting exactly on a breakpoint counts
    for both sides (a probability-zero event under uniform sampling)."""
    us = np.sort(np.asarray(u, dtype=float))
    bp = target.breakpoints
    lo = np.searchsorted(us, bp[:-1], side="left")
    hi = np.searchsorted(us, bp[1:], side="right")
    return hi - lo


def is_spread_good(
    u,
    target: PiecewiseConstantTarget,
    D: float,
    eta: float,
    min_per_piece: int = 6,
) -> GoodnessReport:
    """Certificate that a position vector is spread out enough to recover the
    target: (a) at least ``min_per_piece`` neurons in every closed piece,
    (b) minimum gap >= D, (c) |u_right + u_left - 2 v| >= D per discontinuity.
    """
    if D < 0.0:
        raise ValueError("D must be non-negative")
    u = np.asarray(u, dtype=float)
    witnesses = []

    counts = piece_counts(u, target)
    count_ok = bool(np.all(counts >= min_per_piece))
    if not count_ok:
        i = int(np.argmin(counts))
        witnesses.append(
            f"piece [{target.breakpoints[i]:g},{target.breakpoints[i+1]:g}] holds "
            f"{int(counts[i])} neurons, need >= {min_per_piece}"
        )

    delta = min_gap(u, eta)
    gap_ok = bool(delta >= D)
    if not gap_ok:
        witnesses.append(f"min gap {delta:.3e} < D = {D:.3e}")

    asymmetry_ok = True
    us = np.sort(u)
    for v in target.interior_breakpoints:
        k = int(np.searchsorted(us, v, side="left"))
        if k == 0 or k == us.size:
            asymmetry_ok = False
            witnesses.append(f"no flank pair around {v:g}")
            continue
        asym = abs(us[k] + us[k - 1] - 2.0 * v)
        if asym < D:
            asymmetry_ok = False
            witnesses.append(f"flank asymmetry {asym:.3e} around {v:g} < D = {D:.3e}")

    return GoodnessReport(
        is_good=count_ok and gap_ok and asymmetry_ok,
        count_ok=count_ok,
        gap_ok=gap_ok,
        asymmetry_ok=asymmetry_ok,
        witnesses=tuple(witnesses),
    )


def estimate_good_probability(
    m: int,
    target: PiecewiseConstantTarget,
    D: float,
    eta: float,
    trials: int,
    rng: np.random.Generator,
    min_per_piece: int = 6,
):
    """Monte-Carlo frequency of certificate success for uniform positions,
    with a 95% Wilson interval.  Returns (frequency, low, high).

    All three conditions are evaluated vectorized across trials.
    """
    if trials < 1:
        raise ValueError("need at least one trial")
    us = np.sort(rng.random((trials, m)), axis=1)
    bp = target.breakpoints

    counts_ok = np.ones(trials, dtype=bool)
    for i in range(bp.size - 1):
        left = np.sum(us < bp[i], axis=1)
        right = np.sum(us <= bp[i + 1], axis=1)
        counts_ok &= (right - left) >= min_per_piece

    padded = np.concatenate(
        (np.full((trials, 1), -eta / 2.0), us, np.full((trials, 1), 1.0 + eta / 2.0)), axis=1
    )
    gap_ok = np.min(np.diff(padded, axis=1), axis=1) >= D

    asym_ok = np.ones(trials, dtype=bool)
    for v in target.interior_breakpoints:
        k = np.sum(us < v, axis=1)
        has_both = (k > 0) & (k < m)
        kk = np.clip(k, 1, m - 1)
        rows = np.arange(trials)
        asym = np.abs(us[rows, kk] + us[rows, kk - 1] - 2.0 * v)
        asym_ok &= has_both & (asym >= D)

    good = counts_ok & gap_ok & asym_ok
    freq = float(np.mean(good))
    return (freq, *wilson_interval(int(np.sum(good)), trials))


def wilson_interval(successes: int, trials: int, z: float = _Z95):
    """95% Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    phat = successes / trials
    denom = 1.0 + z**2 / trials
    center = (phat + z**2 / (2 * trials)) / denom
    half = z * np.sqrt(phat * (1 - phat) / trials + z**2 / (4 * trials**2)) / denom
    return max(center - half, 0.0), min(center + half, 1.0)
