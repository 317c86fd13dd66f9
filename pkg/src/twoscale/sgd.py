"""Two-timescale stochastic gradient descent.

One-pass SGD on uniform inputs: the outer weights step with size h, the
positions with size epsilon * h.  Batch gradients are averaged so that a
batch of one reproduces the plain single-sample iteration.

The univariate single-sample path runs in a compiled kernel (the experiment
budgets reach 10^8 steps); it consumes pre-drawn sample blocks and matches
the reference step-by-step implementation to rounding.  Batched and additive
multivariate training use vectorized numpy.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numba import njit

from . import quadratic
from .activation import Activation
from .network import AdditiveNetworkState, NetworkState, forward, sample_gradient
from .records import RunRecord
from .targets import AdditiveTarget, PiecewiseConstantTarget

__all__ = ["SgdConfig", "sample_batch", "sgd_step", "train", "l2_distance_estimate"]

DIVERGENCE_BOUND = 1e3


@dataclass(frozen=True)
class SgdConfig:
    """Iteration settings: outer stepsize h, timescale ratio epsilon (inner
    stepsize epsilon * h), iteration budget, batch size, additive noise kind
    ("none" or "uniform" on [-1, 1]), RNG seed, and the cadence of exact-loss
    snapshots."""

    h: float
    epsilon: float
    steps: int
    batch_size: int = 1
    noise: str = "none"
    seed: int = 0
    eval_every: int = 10_000

    def __post_init__(self):
        if self.h <= 0.0:
            raise ValueError("h must be positive")
        if self.epsilon < 0.0:
            raise ValueError("epsilon must be non-negative")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        if self.noise not in ("none", "uniform"):
            raise ValueError(f"unknown noise kind {self.noise!r}")
        if self.eval_every < 1:
            raise ValueError("eval_every must be at least 1")


def sample_batch(target, noise: str, batch_size: int, rng: np.random.Generator):
    """Uniform inputs on the unit cube with noisy target labels."""
    dim = target.dim if isinstance(target, AdditiveTarget) else 1
    x = rng.random(batch_size) if dim == 1 else rng.random((batch_size, dim))
    y = np.asarray(target(x), dtype=float)
    if noise == "uniform":
        y = y + rng.uniform(-1.0, 1.0, batch_size)
    elif noise != "none":
        raise ValueError(f"unknown noise kind {noise!r}")
    return x, y


def sgd_step(state, act: Activation, batch, h: float, epsilon: float):
    """One update from a batch: weights move by -h times the mean gradient,
    positions by -epsilon*h times the mean gradient."""
    x, y = batch
    if isinstance(state, NetworkState):
        grad_a, grad_u = sample_gradient(state, act, x, y)
        return NetworkState(state.weights - h * grad_a, state.positions - epsilon * h * grad_u)
    grad_bias, grad_w, grad_u = sample_gradient(state, act, x, y)
    return AdditiveNetworkState(
        state.bias - h * grad_bias,
        state.weights - h * grad_w,
        state.positions - epsilon * h * grad_u,
    )


@njit(cache=True)
def _run_chunk_sigmoid(a, u, s_buf, xs, ys, h, eps_h, eta):
    m = u.shape[0]
    half = 0.5 * eta
    for p in range(xs.shape[0]):
        x = xs[p]
        f = a[0]
        for j in range(m):
            t = x - u[j]
            if t >= half:
                s_buf[j] = 1.0
                f += a[j + 1]
            elif t <= -half:
                s_buf[j] = 0.0
            else:
                tt = t / eta
                s = min(max(4.0 * (tt + 0.5) ** 3, 0.0), 0.5) + min(
                    max(0.5 - 4.0 * (0.5 - tt) ** 3, 0.0), 0.5
                )
                s_buf[j] = s
                f += a[j + 1] * s
        r = f - ys[p]
        hr = h * r
        for j in range(m):
            t = x - u[j]
            if -half < t < half:
                tt = t / eta
                at = abs(tt)
                sp = 12.0 * (0.5 - at) ** 2 / eta
                u[j] += eps_h * a[j + 1] * sp * r
            if s_buf[j] != 0.0:
                a[j + 1] -= hr * s_buf[j]
        a[0] -= hr


@njit(cache=True, inline="always")
def _upper_bound(arr, lo, hi, x):
    # first index in sorted arr[lo:hi] with arr[idx] > x
    while lo < hi:
        mid = (lo + hi) // 2
        if arr[mid] <= x:
            lo = mid + 1
        else:
            hi = mid
    return lo


@njit(cache=True)
def _run_chunk_additive(bias_box, W, U, xs, ys, h, eps_h, eta):
    """Batched additive-model steps.

    Per axis the step-like features are accumulated through prefix sums over
    sorted positions, so each sample touches O(log m) entries plus the few
    neurons whose transition window it hits; the full (batch, m, d) feature
    tensor is never formed.
    """
    n_steps, batch, dim = xs.shape[0], xs.shape[1], xs.shape[2]
    m = W.shape[0]
    half = 0.5 * eta
    order = np.empty((dim, m), dtype=np.int64)
    us = np.empty((dim, m))
    pref = np.empty((dim, m + 1))
    resid = np.empty(batch)
    on_idx = np.empty((batch, dim), dtype=np.int64)
    grad_w = np.zeros((m, dim))
    grad_u = np.zeros((m, dim))
    bucket = np.empty(m + 1)

    for s in range(n_steps):
        for k in range(dim):
            ordk = np.argsort(U[:, k])
            acc = 0.0
            pref[k, 0] = 0.0
            for jj in range(m):
                order[k, jj] = ordk[jj]
                us[k, jj] = U[ordk[jj], k]
                acc += W[ordk[jj], k]
                pref[k, jj + 1] = acc

        for i in range(batch):
            f = bias_box[0]
            for k in range(dim):
                x = xs[s, i, k]
                lo = _upper_bound(us[k], 0, m, x - half)
                on_idx[i, k] = lo
                f += pref[k, lo]
                jj = lo
                while jj < m and us[k, jj] < x + half:
                    tt = (x - us[k, jj]) / eta
                    sv = min(max(4.0 * (tt + 0.5) ** 3, 0.0), 0.5) + min(
                        max(0.5 - 4.0 * (0.5 - tt) ** 3, 0.0), 0.5
                    )
                    f += W[order[k, jj], k] * sv
                    jj += 1
            resid[i] = f - ys[s, i]

        grad_bias = 0.0
        for i in range(batch):
            grad_bias += resid[i]
        grad_bias /= batch

        for k in range(dim):
            for jj in range(m + 1):
                bucket[jj] = 0.0
            for i in range(batch):
                # Fully-on features: every sorted position before on_idx sees
                # this residual; collected via one bucket plus a suffix sum.
                bucket[on_idx[i, k]] += resid[i]
                x = xs[s, i, k]
                jj = on_idx[i, k]
                while jj < m and us[k, jj] < x + half:
                    tt = (x - us[k, jj]) / eta
                    at = abs(tt)
                    sv = min(max(4.0 * (tt + 0.5) ** 3, 0.0), 0.5) + min(
                        max(0.5 - 4.0 * (0.5 - tt) ** 3, 0.0), 0.5
                    )
                    j = order[k, jj]
                    grad_w[j, k] += resid[i] * sv / batch
                    grad_u[j, k] += resid[i] * 12.0 * (0.5 - at) ** 2 / eta / batch
                    jj += 1
            tail = 0.0
            for jj in range(m, 0, -1):
                tail += bucket[jj]
                grad_w[order[k, jj - 1], k] += tail / batch

        # Positions step with the pre-update weights.
        for k in range(dim):
            for j in range(m):
                U[j, k] += eps_h * W[j, k] * grad_u[j, k]
                W[j, k] -= h * grad_w[j, k]
                grad_w[j, k] = 0.0
                grad_u[j, k] = 0.0
        bias_box[0] -= h * grad_bias
    return 0


@njit(cache=True)
def _run_chunk_relu(a, u, xs, ys, h, eps_h):
    m = u.shape[0]
    for p in range(xs.shape[0]):
        x = xs[p]
        f = a[0]
        for j in range(m):
            t = x - u[j]
            if t > 0.0:
                f += a[j + 1] * t
        r = f - ys[p]
        hr = h * r
        for j in range(m):
            t = x - u[j]
            if t > 0.0:
                u[j] += eps_h * a[j + 1] * r
                a[j + 1] -= hr * t
        a[0] -= hr


def _exact_loss_1d(state: NetworkState, act: Activation, target) -> float:
    return quadratic.loss(state.weights, state.positions, act, target)


@njit(cache=True)
def _additive_forward(bias, W, U, xs, eta, out):
    n, dim = xs.shape
    m = W.shape[0]
    half = 0.5 * eta
    for i in range(n):
        f = bias
        for j in range(m):
            for k in range(dim):
                t = xs[i, k] - U[j, k]
                if t >= half:
                    f += W[j, k]
                elif t > -half:
                    tt = t / eta
                    sv = min(max(4.0 * (tt + 0.5) ** 3, 0.0), 0.5) + min(
                        max(0.5 - 4.0 * (0.5 - tt) ** 3, 0.0), 0.5
                    )
                    f += W[j, k] * sv
        out[i] = f
    return out


def l2_distance_estimate(state, act: Activation, target, n_points: int = 1_000_000, seed: int = 0):
    """Monte-Carlo squared L2 distance to an additive target on the unit cube
    (fixed seeded sample so repeated evaluations are comparable)."""
    rng = np.random.default_rng(seed)
    total = 0.0
    remaining = n_points
    compiled = isinstance(state, AdditiveNetworkState) and act.is_smooth
    buf = np.empty(100_000) if compiled else None
    while remaining > 0:
        block = min(remaining, 100_000)
        x = rng.random((block, target.dim))
        if compiled:
            vals = _additive_forward(
                state.bias, state.weights, state.positions, x, act.eta, buf[:block]
            )
        else:
            vals = forward(state, act, x)
        resid = vals - target(x)
        total += float(np.dot(resid, resid))
        remaining -= block
    return total / n_points


def _alignment(state, target) -> np.ndarray:
    if isinstance(state, NetworkState):
        return np.array(
            [np.min(np.abs(state.positions - v)) for v in target.interior_breakpoints]
        )
    dists = []
    for k, component in enumerate(target.components):
        for v in component.interior_breakpoints:
            dists.append(np.min(np.abs(state.positions[:, k] - v)))
    return np.array(dists)


def _flat_state(state):
    if isinstance(state, NetworkState):
        return state.weights.copy(), state.positions.copy()
    return (
        np.concatenate(([state.bias], state.weights.ravel())),
        state.positions.ravel().copy(),
    )


def train(state0, target, act: Activation, config: SgdConfig) -> RunRecord:
    """Run the two-timescale iteration and record exact (univariate) or
    fixed-sample Monte-Carlo (multivariate) loss every ``eval_every`` steps.

    The sample stream is drawn in blocks of ``eval_every`` from the seeded
    generator, so a run is fully determined by (state0, config).  Aborts if
    the sup-norm of the weights exceeds the divergence bound.
    """
    if act.kind == "heaviside":
        raise ValueError("SGD needs a differentiable activation")
    rng = np.random.default_rng(config.seed)
    univariate = isinstance(state0, NetworkState)
    relu_target = not isinstance(target, (PiecewiseConstantTarget, AdditiveTarget))

    def loss_of(state):
        if univariate:
            return _exact_loss_1d(state, act, target)
        return 0.5 * l2_distance_estimate(state, act, target)

    times, weights, positions, losses, aligns = [], [], [], [], []

    def snapshot(p, state):
        w, pos = _flat_state(state)
        times.append(float(p))
        weights.append(w)
        positions.append(pos)
        losses.append(loss_of(state))
        if relu_target:
            aligns.append(np.array([np.min(np.abs(pos - v)) for v in target.knots]))
        else:
            aligns.append(_alignment(state, target))

    state = state0
    snapshot(0, state)

    fast_1d = univariate and config.batch_size == 1
    additive = isinstance(state0, AdditiveNetworkState)
    fast_add = additive and act.is_smooth
    if fast_1d:
        a_buf, u_buf = state.weights.copy(), state.positions.copy()
        s_buf = np.empty(state.positions.size)
    if fast_add:
        bias_box = np.array([state.bias])
        w_buf, u2_buf = state.weights.copy(), state.positions.copy()
        # Sub-chunk size keeps the pre-drawn sample block around 30 MB.
        sub = max(1, 4_000_000 // (config.batch_size * state.dim))

    done = 0
    eps_h = config.epsilon * config.h
    while done < config.steps:
        block = min(config.eval_every, config.steps - done)
        if fast_1d:
            xs, ys = sample_batch(target, config.noise, block, rng)
            if act.is_smooth:
                _run_chunk_sigmoid(a_buf, u_buf, s_buf, xs, ys, config.h, eps_h, act.eta)
            else:
                _run_chunk_relu(a_buf, u_buf, xs, ys, config.h, eps_h)
            state = NetworkState(a_buf.copy(), u_buf.copy())
        elif fast_add:
            left = block
            while left > 0:
                n_sub = min(sub, left)
                xs = rng.random((n_sub, config.batch_size, state.dim))
                ys = np.asarray(target(xs.reshape(-1, state.dim)), dtype=float)
                if config.noise == "uniform":
                    ys = ys + rng.uniform(-1.0, 1.0, ys.size)
                ys = ys.reshape(n_sub, config.batch_size)
                _run_chunk_additive(bias_box, w_buf, u2_buf, xs, ys, config.h, eps_h, act.eta)
                left -= n_sub
            state = AdditiveNetworkState(bias_box[0], w_buf.copy(), u2_buf.copy())
        else:
            for _ in range(block):
                batch = sample_batch(target, config.noise, config.batch_size, rng)
                state = sgd_step(state, act, batch, config.h, config.epsilon)
        done += block
        w, _ = _flat_state(state)
        if not np.all(np.isfinite(w)) or np.max(np.abs(w)) > DIVERGENCE_BOUND:
            raise RuntimeError(
                f"divergence guard tripped at step {done}: max |weight| = {np.max(np.abs(w)):.3e}"
            )
        snapshot(done, state)

    return RunRecord(
        times=np.array(times),
        weights=np.array(weights),
        positions=np.array(positions),
        losses=np.array(losses),
        alignment=np.array(aligns),
    )
