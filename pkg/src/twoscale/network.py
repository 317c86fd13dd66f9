"""Shallow translation-only networks and their gradients.

The univariate model is bias plus a weighted sum of shifted activations; the
additive multivariate model applies one activation per (neuron, axis) pair
and sums everything.  Per-sample gradients drive SGD; the population gradient
of the exact loss is closed form in both blocks for the smooth sigmoid.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import quadratic
from .activation import Activation
from .targets import PiecewiseConstantTarget

__all__ = [
    "NetworkState",
    "AdditiveNetworkState",
    "forward",
    "sample_gradient",
    "population_gradient",
]


@dataclass(frozen=True)
class NetworkState:
    """Univariate network: weights (bias first, length m+1) and m positions."""

    weights: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.weights, dtype=float)
        u = np.asarray(self.positions, dtype=float)
        if a.ndim != 1 or u.ndim != 1 or a.size != u.size + 1:
            raise ValueError(f"need m+1 weights for m positions, got {a.size} and {u.size}")
        object.__setattr__(self, "weights", a)
        object.__setattr__(self, "positions", u)

    @property
    def m(self) -> int:
        return self.positions.size


@dataclass(frozen=True)
class AdditiveNetworkState:
    """Additive multivariate network: scalar bias plus (m, d) weights and
    (m, d) positions, one activation per neuron-axis pair."""

    bias: float
    weights: np.ndarray
    positions: np.ndarray

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        u = np.asarray(self.positions, dtype=float)
        if w.ndim != 2 or w.shape != u.shape:
            raise ValueError(f"weights and positions must share shape (m, d), got {w.shape}, {u.shape}")
        object.__setattr__(self, "bias", float(self.bias))
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "positions", u)

    @property
    def m(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]


def forward(state, act: Activation, x):
    """Network output at x (scalar/vector input, optionally batched)."""
    if isinstance(state, NetworkState):
        x = np.asarray(x, dtype=float)
        feats = act.value(x[..., None] - state.positions)
        out = state.weights[0] + feats @ state.weights[1:]
        return out if out.ndim else float(out)
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != state.dim:
        raise ValueError(f"expected {state.dim} input coordinates, got {x.shape[1]}")
    feats = act.value(x[:, None, :] - state.positions[None, :, :])
    out = state.bias + np.tensordot(feats, state.weights, axes=([1, 2], [0, 1]))
    return float(out[0]) if single else out


def sample_gradient(state, act: Activation, x, y):
    """Gradient of the per-sample squared-error loss, averaged over the batch.

    Returns (grad_weights, grad_positions) matching the state layout; the
    bias gradient occupies the first weight slot.  The step activation has no
    pointwise derivative and is rejected.
    """
    if act.kind == "heaviside":
        raise ValueError("per-sample gradients need a differentiable activation")
    if isinstance(state, NetworkState):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        diff = x[:, None] - state.positions
        feats = act.value(diff)
        resid = state.weights[0] + feats @ state.weights[1:] - y
        grad_a = np.empty(state.weights.size)
        grad_a[0] = resid.mean()
        grad_a[1:] = feats.T @ resid / x.size
        grad_u = -(state.weights[1:] * (act.derivative(diff).T @ resid)) / x.size
        return grad_a, grad_u

    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    y = np.atleast_1d(np.asarray(y, dtype=float))
    diff = x[:, None, :] - state.positions[None, :, :]
    feats = act.value(diff)
    resid = state.bias + np.tensordot(feats, state.weights, axes=([1, 2], [0, 1])) - y
    batch = x.shape[0]
    grad_bias = float(resid.mean())
    grad_w = np.tensordot(resid, feats, axes=(0, 0)) / batch
    grad_u = -state.weights * np.tensordot(resid, act.derivative(diff), axes=(0, 0)) / batch
    return grad_bias, grad_w, grad_u


def position_gradient(a, u, act: Activation, target: PiecewiseConstantTarget) -> np.ndarray:
    """Exact gradient of the population loss in the positions, for admissible
    configurations of the smooth sigmoid.

    Each position integrates the residual against the localized derivative of
    its own activation; inside the admissible set no two transition windows
    overlap, so the network restricted to one window is the running prefix sum
    plus that neuron's own step.  The integral is closed form piecewise, split
    at any target breakpoints crossing the window.
    """
    a = np.asarray(a, dtype=float)
    u = np.asarray(u, dtype=float)
    if not act.is_smooth:
        raise ValueError("the population position-gradient needs the smooth sigmoid (eta > 0)")
    quadratic._require_admissible(u, act.eta)

    eta = act.eta
    order = np.argsort(u, kind="stable")
    us = u[order]
    aw = a[1:][order]
    prefix = a[0] + np.concatenate(([0.0], np.cumsum(aw)[:-1]))
    w_lo = us - eta / 2.0
    w_hi = us + eta / 2.0
    interior = target.interior_breakpoints
    n_cross = np.searchsorted(interior, w_hi, side="left") - np.searchsorted(
        interior, w_lo, side="right"
    )

    grad_sorted = np.empty(us.size)
    clean = n_cross == 0
    vals = target(us)
    # No breakpoint in the window: the residual integral telescopes to the
    # full rise of the activation and half the rise of its square.
    grad_sorted[clean] = -aw[clean] * (prefix[clean] - vals[clean] + 0.5 * aw[clean])
    for j in np.nonzero(~clean)[0]:
        cuts = interior[(interior > w_lo[j]) & (interior < w_hi[j])]
        xs = np.concatenate(([w_lo[j]], cuts, [w_hi[j]]))
        s = act.value(xs - us[j])
        piece_vals = target(xs[:-1])
        total = float(
            np.dot(prefix[j] - piece_vals, np.diff(s)) + 0.5 * aw[j] * (s[-1] ** 2 - s[0] ** 2)
        )
        grad_sorted[j] = -aw[j] * total

    grad = np.empty_like(grad_sorted)
    grad[order] = grad_sorted
    return grad


def population_gradient(state: NetworkState, act: Activation, target: PiecewiseConstantTarget):
    """Exact gradient of the population loss in both blocks (smooth sigmoid,
    admissible positions)."""
    if not act.is_smooth:
        raise ValueError("the population gradient needs the smooth sigmoid (eta > 0)")
    H = quadratic.hessian(state.positions, act)
    b = quadratic.linear_term(state.positions, act, target)
    grad_a = H @ state.weights - b
    grad_u = position_gradient(state.weights, state.positions, act, target)
    return grad_a, grad_u
