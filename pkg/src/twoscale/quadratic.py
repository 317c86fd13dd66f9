"""Exact population loss as a quadratic form in the outer weights.

For positions u whose pairwise gaps (including the virtual boundary positions
-eta/2 and 1+eta/2) exceed 2*eta, the half mean-squared error against a
staircase target is

    L(a, u) = 1/2 a^T H(u) a - b(u)^T a + c

with Gram matrix H, feature/target correlations b, and c half the integral of
the squared target.  H has the step-limit entries 1 - max(u_i, u_j, 0) plus a
position-independent diagonal window correction; b is the step-limit value
plus a window correction that vanishes unless a target breakpoint falls in
the transition window.  Everything here is closed form; the only quadrature
in the module is the one-off squared-sigmoid window constant.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.linalg import cho_factor, cho_solve

from .activation import Activation
from .targets import PiecewiseConstantTarget

__all__ = [
    "Spacing",
    "min_gap",
    "is_admissible",
    "spacing",
    "hessian",
    "linear_term",
    "best_fit",
    "best_fit_heaviside",
    "step_fit",
    "loss",
    "reduced_loss",
    "min_eigenvalue",
]


def min_gap(u, eta: float = 0.0) -> float:
    """Minimum pairwise distance among positions, including the virtual
    boundary positions -eta/2 and 1 + eta/2."""
    u = np.asarray(u, dtype=float)
    us = np.sort(u)
    inner = float(np.min(np.diff(us))) if us.size > 1 else np.inf
    return float(min(inner, us[0] + eta / 2.0, 1.0 + eta / 2.0 - us[-1]))


def is_admissible(u, eta: float) -> bool:
    """True when the best response is well conditioned: all gaps > 2*eta."""
    return min_gap(u, eta) > 2.0 * eta


def _require_admissible(u, eta: float):
    gap = min_gap(u, eta)
    if gap <= 2.0 * eta:
        raise ValueError(
            f"positions outside the admissible set: min gap {gap:.3e} <= 2*eta = {2 * eta:.3e}"
        )


@dataclass(frozen=True)
class Spacing:
    """Minimum gap plus, when a target is supplied, the flanking neuron
    positions (left, right) for each discontinuity; None on an empty side."""

    delta: float
    flanks: tuple | None = None


def _flank_indices(u: np.ndarray, v: float):
    """Indices of the nearest positions strictly left/right of v (None if empty)."""
    left = np.where(u < v)[0]
    right = np.where(u > v)[0]
    j_left = int(left[np.argmax(u[left])]) if left.size else None
    j_right = int(right[np.argmin(u[right])]) if right.size else None
    return j_left, j_right


def spacing(u, eta: float, target: PiecewiseConstantTarget | None = None) -> Spacing:
    u = np.asarray(u, dtype=float)
    delta = min_gap(u, eta)
    flanks = None
    if target is not None:
        pairs = []
        for v in target.interior_breakpoints:
            j_left, j_right = _flank_indices(u, v)
            pairs.append(
                (
                    float(u[j_left]) if j_left is not None else None,
                    float(u[j_right]) if j_right is not None else None,
                )
            )
        flanks = tuple(pairs)
    return Spacing(delta=delta, flanks=flanks)


def hessian(u, act: Activation) -> np.ndarray:
    """Exact Gram matrix of the features (bias first), for admissible u."""
    u = np.asarray(u, dtype=float)
    _require_admissible(u, act.eta)
    uu = np.concatenate(([-act.eta / 2.0], u))
    H = 1.0 - np.maximum(np.maximum.outer(uu, uu), 0.0)
    if act.is_smooth:
        # Window correction: diagonal and independent of the positions.
        H[np.arange(1, uu.size), np.arange(1, uu.size)] += act.eta * (act.sq_window_integral - 0.5)
    return H


def linear_term(u, act: Activation, target: PiecewiseConstantTarget) -> np.ndarray:
    """Exact correlation of each feature (bias first) with the target."""
    u = np.asarray(u, dtype=float)
    total = target.integral(0.0, 1.0)
    b = np.empty(u.size + 1)
    b[0] = total
    if not act.is_smooth:
        if act.kind != "heaviside":
            raise ValueError("linear term is defined for the sigmoid family only")
        b[1:] = total - target.cumulative(np.clip(u, 0.0, 1.0))
        return b

    eta = act.eta
    w_lo = u - eta / 2.0
    w_hi = u + eta / 2.0
    interior = target.interior_breakpoints
    crosses = (
        np.searchsorted(interior, w_hi, side="left") - np.searchsorted(interior, w_lo, side="right")
    ) != 0
    clean = ~crosses & (w_lo >= 0.0) & (w_hi <= 1.0)

    # Clean windows: the target is constant there, the odd part of the sigmoid
    # integrates to exactly half the window, and the value collapses to the
    # step-limit expression (same float path, so the equality is bitwise).
    b[1:] = total - target.cumulative(np.clip(u, 0.0, 1.0))
    for j in np.nonzero(~clean)[0]:
        lo = min(max(w_lo[j], 0.0), 1.0)
        hi = min(max(w_hi[j], 0.0), 1.0)
        cuts = interior[(interior > lo) & (interior < hi)]
        xs = np.concatenate(([lo], cuts, [hi]))
        cum = act.cumulative(xs - u[j])
        piece_vals = target(xs[:-1])
        window = float(np.dot(piece_vals, np.diff(cum)))
        b[j + 1] = window + target.integral(hi, 1.0)
    return b


def best_fit(u, act: Activation, target: PiecewiseConstantTarget) -> np.ndarray:
    """Unique minimizer of the loss in the outer weights for fixed positions,
    via a symmetric positive-definite solve.  Requires admissible u."""
    H = hessian(u, act)
    b = linear_term(u, act, target)
    try:
        factor = cho_factor(H)
    except np.linalg.LinAlgError as exc:
        raise ValueError(
            f"best-fit factorization failed (min gap {min_gap(u, act.eta):.3e}): {exc}"
        ) from exc
    a = cho_solve(factor, b)
    residual = float(np.linalg.norm(H @ a - b))
    if residual > 1e-10:
        raise ValueError(
            f"best-fit residual {residual:.3e} exceeds 1e-10 (min gap {min_gap(u, act.eta):.3e})"
        )
    return a


def _check_two_per_piece(u: np.ndarray, target: PiecewiseConstantTarget):
    if np.unique(u).size != u.size or np.any(u <= 0.0) or np.any(u >= 1.0):
        raise ValueError("positions must be distinct and strictly inside (0, 1)")
    bp = target.breakpoints
    counts = np.searchsorted(np.sort(u), bp[1:], side="left") - np.searchsorted(
        np.sort(u), bp[:-1], side="right"
    )
    if np.any(counts < 2):
        short = int(np.argmin(counts))
        raise ValueError(
            f"piece ({bp[short]:g},{bp[short + 1]:g}) holds {int(counts[short])} neurons, need >= 2"
        )


def best_fit_heaviside(u, target: PiecewiseConstantTarget) -> np.ndarray:
    """Closed-form step-limit best fit: the bias matches the leftmost piece,
    each discontinuity splits its jump across its two flanking neurons in
    proportion to the opposite gap, and every other weight is zero.

    Requires at least two positions strictly inside every piece.
    """
    u = np.asarray(u, dtype=float)
    _check_two_per_piece(u, target)
    a = np.zeros(u.size + 1)
    a[0] = target.values[0]
    for v, jump in zip(target.interior_breakpoints, target.jumps):
        j_left, j_right = _flank_indices(u, v)
        gap = u[j_right] - u[j_left]
        a[j_left + 1] += (u[j_right] - v) / gap * jump
        a[j_right + 1] += (v - u[j_left]) / gap * jump
    return a


def step_fit(u, target: PiecewiseConstantTarget):
    """Best piecewise-constant approximation of the target on the subdivision
    given by the positions: cell-wise exact averages.

    Unlike the flanking closed form this needs no per-piece neuron count, and
    it tolerates positions sitting exactly on breakpoints or on each other
    (duplicates contribute zero weight).  Returns (weights, loss).
    """
    u = np.asarray(u, dtype=float)
    order = np.argsort(u, kind="stable")
    us = u[order]
    edges = np.concatenate(([0.0], np.clip(us, 0.0, 1.0), [1.0]))
    widths = np.diff(edges)
    means = np.zeros(us.size + 1)
    sq = 0.0
    for k in range(widths.size):
        if widths[k] > 0.0:
            means[k] = target.integral(edges[k], edges[k + 1]) / widths[k]
            sq += means[k] ** 2 * widths[k]
    # Empty cells inherit the previous level so their weight is zero.
    for k in range(1, widths.size):
        if widths[k] == 0.0:
            means[k] = means[k - 1]
    a = np.empty(us.size + 1)
    a[0] = means[0]
    a_sorted = np.diff(means)
    a[1:][order] = a_sorted
    fit_loss = 0.5 * (target.integral(0.0, 1.0, power=2) - sq)
    return a, max(fit_loss, 0.0)


_GL_NODES, _GL_WEIGHTS = leggauss(4)


def _network_values(a: np.ndarray, u: np.ndarray, act: Activation, x: np.ndarray) -> np.ndarray:
    return a[0] + act.value(x[:, None] - u[None, :]) @ a[1:]


def loss(a, u, act: Activation, target) -> float:
    """Exact half mean-squared error of the network against the target.

    Computed by splitting [0, 1] at every transition-window edge and target
    breakpoint and applying fixed-order Gauss-Legendre on each cell; the
    integrand is a polynomial of degree at most six there, so the result is
    exact to rounding for every admissible or inadmissible configuration.  On
    the admissible set it agrees with 1/2 a^T H a - b^T a + c.
    """
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    if act.is_smooth:
        cuts = np.concatenate((u - act.eta / 2.0, u, u + act.eta / 2.0))
    elif act.kind == "heaviside":
        cuts = u
    else:
        cuts = u
    if isinstance(target, PiecewiseConstantTarget):
        target_cuts = target.interior_breakpoints
    else:
        target_cuts = np.asarray(getattr(target, "knots"), dtype=float)
    edges = np.unique(np.concatenate(([0.0, 1.0], cuts[(cuts > 0.0) & (cuts < 1.0)], target_cuts)))
    lo, hi = edges[:-1], edges[1:]
    half = (hi - lo) / 2.0
    mid = (hi + lo) / 2.0
    xs = (mid[:, None] + half[:, None] * _GL_NODES[None, :]).ravel()
    resid = _network_values(a, u, act, xs) - target(xs)
    cellwise = (resid**2).reshape(-1, _GL_NODES.size) @ _GL_WEIGHTS
    return 0.5 * float(np.dot(cellwise, half))


def reduced_loss(u, target: PiecewiseConstantTarget) -> float:
    """Loss at the step-limit best response, as a sum of independent
    per-discontinuity terms (vanishes when a flank sits on its breakpoint)."""
    u = np.asarray(u, dtype=float)
    _check_two_per_piece(u, target)
    total = 0.0
    for v, jump in zip(target.interior_breakpoints, target.jumps):
        j_left, j_right = _flank_indices(u, v)
        u_left, u_right = u[j_left], u[j_right]
        total += (v - u_left) * (u_right - v) / (u_right - u_left) * jump**2
    return 0.5 * total


def min_eigenvalue(H) -> float:
    """Smallest eigenvalue of a symmetric matrix: direct decomposition up to
    size 64, inverse power iteration above."""
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("need a square matrix")
    if not np.allclose(H, H.T, atol=1e-12):
        raise ValueError("matrix is not symmetric")
    n = H.shape[0]
    if n <= 64:
        return float(np.linalg.eigvalsh(H)[0])

    from scipy.linalg import lu_factor, lu_solve

    # Shifted inverse iteration: H is symmetric so eigenvalues are real; the
    # Rayleigh quotient of the inverse iterate converges to the one nearest
    # the shift. A small negative shift keeps the factorization nonsingular
    # for positive semi-definite inputs.
    shift = -1e-12 * max(1.0, float(np.linalg.norm(H, ord=1)))
    lu = lu_factor(H - shift * np.eye(n))
    rng = np.random.default_rng(0)
    x = rng.standard_normal(n)
    x /= np.linalg.norm(x)
    lam = float(x @ H @ x)
    for _ in range(500):
        y = lu_solve(lu, x)
        y /= np.linalg.norm(y)
        lam_new = float(y @ H @ y)
        if abs(lam_new - lam) <= 1e-8 * max(abs(lam_new), 1e-300):
            return lam_new
        lam, x = lam_new, y
    return lam
