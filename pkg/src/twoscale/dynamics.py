"""Continuous-time training dynamics.

Three systems share a fixed-step classical Runge-Kutta integrator:

* the step-limit reduced system, where only the two neurons flanking each
  discontinuity move and everything is closed form;
* the smooth-sigmoid limit, where the weights are substituted by their best
  response at every stage and only the positions evolve;
* the full coupled flow, outer weights at unit rate and positions slowed by
  the timescale ratio.

Slow time is used for the two limit systems, raw time for the full flow.
Integration stops with a diagnostic if the positions leave the admissible
set; the reduced system instead clamps a flank permanently once it reaches
its discontinuity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels, quadratic
from .activation import Activation
from .records import RunRecord
from .targets import PiecewiseConstantTarget

__all__ = [
    "FlowConfig",
    "FlowAbort",
    "recovery_horizon",
    "alignment_report",
    "integrate_limit_reduced",
    "integrate_limit_smooth",
    "integrate_full_flow",
    "default_full_flow_dt",
]


class FlowAbort(RuntimeError):
    """Integration stopped before the horizon; carries the partial record."""

    def __init__(self, message: str, record: RunRecord | None = None):
        super().__init__(message)
        self.record = record


@dataclass(frozen=True)
class FlowConfig:
    """Integration settings.  dt and t_end are in slow time for the limit
    systems and in raw time for the full flow; record_every counts steps."""

    dt: float
    t_end: float
    eta: float = 0.0
    epsilon: float = 0.0
    record_every: int = 100
    absorb_tol: float = 1e-9

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError("dt must be positive")
        if self.t_end < 0.0:
            raise ValueError("t_end must be non-negative")
        if self.record_every < 1:
            raise ValueError("record_every must be at least 1")


def default_full_flow_dt(m: int) -> float:
    """Stability-bounded step for the full flow: the Gram matrix has entries
    in [0, 1] so its largest eigenvalue is at most m+1."""
    return 0.1 / (m + 1)


def recovery_horizon(epsilon: float, delta_f: float) -> float:
    """Time by which every discontinuity acquires an aligned neuron:
    6 / (epsilon * delta_f^2); pass epsilon = 1 for the limit-system horizon."""
    if delta_f <= 0.0:
        raise ValueError("delta_f must be positive")
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive (use 1 for the limit system)")
    return 6.0 / (epsilon * delta_f**2)


def alignment_report(u, target: PiecewiseConstantTarget) -> np.ndarray:
    """Distance from each discontinuity to its nearest position."""
    u = np.asarray(u, dtype=float)
    return np.array([np.min(np.abs(u - v)) for v in target.interior_breakpoints])


def _steps(config: FlowConfig) -> int:
    return int(round(config.t_end / config.dt))


def _rk4(u: np.ndarray, dt: float, field) -> np.ndarray:
    k1 = field(u)
    k2 = field(u + 0.5 * dt * k1)
    k3 = field(u + 0.5 * dt * k2)
    k4 = field(u + dt * k3)
    return u + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# ---------------------------------------------------------------------------
# Reduced step-limit system


def _flank_assignment(u: np.ndarray, target: PiecewiseConstantTarget, done: np.ndarray):
    """Per-discontinuity flank indices (left, right), None for finished ones.

    A neuron clamped exactly on another discontinuity still flanks its
    neighbors; one clamped on this discontinuity cannot happen here because
    the discontinuity would already be marked done.
    """
    order = np.argsort(u, kind="stable")
    us = u[order]
    pairs = []
    for i, v in enumerate(target.interior_breakpoints):
        if done[i]:
            pairs.append(None)
            continue
        k = int(np.searchsorted(us, v, side="left"))
        if k == 0 or k == us.size:
            raise FlowAbort(f"discontinuity at {v:g} lost a flank")
        pairs.append((int(order[k - 1]), int(order[k])))
    return pairs


def _reduced_velocity(
    u: np.ndarray, target: PiecewiseConstantTarget, pairs, clamped: np.ndarray
) -> np.ndarray:
    vel = np.zeros_like(u)
    interior = target.interior_breakpoints
    jumps = target.jumps
    for i, pair in enumerate(pairs):
        if pair is None:
            continue
        j_left, j_right = pair
        v = interior[i]
        gap = u[j_right] - u[j_left]
        d_left = v - u[j_left]
        d_right = u[j_right] - v
        g2 = jumps[i] * jumps[i]
        vel[j_left] += 0.5 * (d_right / gap) ** 2 * g2
        vel[j_right] -= 0.5 * (d_left / gap) ** 2 * g2
    vel[clamped] = 0.0
    return vel


def _crossed_flanks(u: np.ndarray, pairs, interior: np.ndarray, tol: float):
    """(disc index, flank indices) whose flank reached or passed its
    discontinuity under the frozen assignment."""
    hits = []
    for i, pair in enumerate(pairs):
        if pair is None:
            continue
        j_left, j_right = pair
        v = interior[i]
        near = []
        if u[j_left] >= v - tol:
            near.append(j_left)
        if u[j_right] <= v + tol:
            near.append(j_right)
        if near:
            hits.append((i, near))
    return hits


def integrate_limit_reduced(u0, target: PiecewiseConstantTarget, config: FlowConfig) -> RunRecord:
    """Step-limit dynamics: flanks drift toward their discontinuity, everyone
    else is conserved exactly.  A flank reaching its discontinuity is clamped
    there permanently, which zeroes both velocity terms of that discontinuity.

    Flank roles are frozen across the stages of one step and recomputed
    afterwards.  The per-step absorption check locates the hit time within
    the step by bisection before clamping, so the scheme keeps its
    fourth-order accuracy through absorption events.

    Snapshots store the cell-average step fit and its loss.
    """
    u = np.array(u0, dtype=float)
    quadratic._check_two_per_piece(u, target)
    interior = target.interior_breakpoints
    tol = config.absorb_tol
    done = np.zeros(interior.size, dtype=bool)
    clamped = np.zeros(u.size, dtype=bool)

    times, weights, positions, losses, aligns = [], [], [], [], []

    def snapshot(tau: float):
        a, fit_loss = quadratic.step_fit(u, target)
        times.append(tau)
        weights.append(a)
        positions.append(u.copy())
        losses.append(fit_loss)
        aligns.append(alignment_report(u, target))

    def advance(u_from: np.ndarray, span: float, pairs) -> np.ndarray:
        return _rk4(u_from, span, lambda x: _reduced_velocity(x, target, pairs, clamped))

    snapshot(0.0)
    n_steps = _steps(config)
    for step in range(1, n_steps + 1):
        remaining = config.dt
        guard = 0
        while remaining > 0.0:
            guard += 1
            if guard > 50:
                raise FlowAbort(f"absorption cascade did not settle at step {step}")
            pairs = _flank_assignment(u, target, done)
            u_next = advance(u, remaining, pairs)
            hits = _crossed_flanks(u_next, pairs, interior, tol)
            if not hits:
                u = u_next
                break
            # Bisect the first hit time within the remaining span.
            lo, hi = 0.0, 1.0
            for _ in range(60):
                mid = 0.5 * (lo + hi)
                if _crossed_flanks(advance(u, mid * remaining, pairs), pairs, interior, tol):
                    hi = mid
                else:
                    lo = mid
            u = advance(u, hi * remaining, pairs)
            for i, near in _crossed_flanks(u, pairs, interior, tol):
                u[near] = interior[i]
                clamped[near] = True
                done[i] = True
            remaining *= 1.0 - hi
        free = u[~clamped]
        if free.size > 1 and np.min(np.diff(np.sort(free))) <= 0.0:
            raise FlowAbort(
                f"flank collision away from a discontinuity at slow time {step * config.dt:g}"
            )
        if step % config.record_every == 0 or step == n_steps:
            snapshot(step * config.dt)

    return RunRecord(
        times=np.array(times),
        weights=np.array(weights),
        positions=np.array(positions),
        losses=np.array(losses),
        alignment=np.array(aligns),
    )


# ---------------------------------------------------------------------------
# Smooth two-timescale limit


def _flow_tables(target: PiecewiseConstantTarget, act: Activation):
    dcorr = act.eta * (act.sq_window_integral - 0.5)
    half_sq = 0.5 * target.integral(0.0, 1.0, power=2)
    return dcorr, target.breakpoints, target.values, target._cum_integral, half_sq


def integrate_limit_smooth(
    u0, target: PiecewiseConstantTarget, act: Activation, config: FlowConfig
) -> RunRecord:
    """Position-only dynamics with the weights substituted by their best
    response at every Runge-Kutta stage.  Halts with a diagnostic (partial
    record attached) if the positions leave the admissible set."""
    if not act.is_smooth:
        raise ValueError("the smooth limit needs the smooth sigmoid; use the reduced system for eta = 0")
    u = np.array(u0, dtype=float)
    eta = act.eta
    if not quadratic.is_admissible(u, eta):
        raise ValueError(
            f"initial positions outside the admissible set (min gap {quadratic.min_gap(u, eta):.3e})"
        )
    dcorr, bp, vals, cumtab, half_sq = _flow_tables(target, act)

    def field(x):
        du, _, _ = _kernels.smooth_field(x, eta, dcorr, bp, vals, cumtab, half_sq)
        return du

    times, weights, positions, losses, aligns = [], [], [], [], []

    def snapshot(tau: float):
        _, a, loss_val = _kernels.smooth_field(u, eta, dcorr, bp, vals, cumtab, half_sq)
        times.append(tau)
        weights.append(a)
        positions.append(u.copy())
        losses.append(loss_val)
        aligns.append(alignment_report(u, target))

    def partial() -> RunRecord:
        return RunRecord(
            times=np.array(times),
            weights=np.array(weights),
            positions=np.array(positions),
            losses=np.array(losses),
            alignment=np.array(aligns),
        )

    snapshot(0.0)
    n_steps = _steps(config)
    for step in range(1, n_steps + 1):
        u = _rk4(u, config.dt, field)
        if _kernels.min_gap_kernel(u, eta) <= 2.0 * eta:
            raise FlowAbort(
                f"left the admissible set at slow time {step * config.dt:g} "
                f"(min gap {quadratic.min_gap(u, eta):.3e})",
                partial(),
            )
        if step % config.record_every == 0 or step == n_steps:
            snapshot(step * config.dt)
    return partial()


# ---------------------------------------------------------------------------
# Full coupled gradient flow


def integrate_full_flow(
    a0, u0, target: PiecewiseConstantTarget, act: Activation, config: FlowConfig
) -> RunRecord:
    """Coupled flow: weights at unit rate, positions at rate epsilon.

    Aborts if a step increases the exact loss by more than 1e-6 (step-size
    instability) and halts if the positions leave the admissible set.
    Snapshots additionally record the distance of the weights to their best
    response.
    """
    if not act.is_smooth:
        raise ValueError("the full flow needs the smooth sigmoid (eta > 0)")
    if config.epsilon < 0.0:
        raise ValueError("epsilon must be non-negative")
    a = np.array(a0, dtype=float)
    u = np.array(u0, dtype=float)
    eta = act.eta
    if not quadratic.is_admissible(u, eta):
        raise ValueError(
            f"initial positions outside the admissible set (min gap {quadratic.min_gap(u, eta):.3e})"
        )
    dcorr, bp, vals, cumtab, half_sq = _flow_tables(target, act)

    def rhs(a_cur, u_cur):
        return _kernels.full_flow_rhs(
            a_cur, u_cur, eta, dcorr, bp, vals, cumtab, half_sq, config.epsilon
        )

    times, weights, positions, losses, aligns, gaps = [], [], [], [], [], []

    def snapshot(t: float, loss_val: float):
        a_star = _kernels.best_response(u, eta, dcorr, bp, vals, cumtab)
        times.append(t)
        weights.append(a.copy())
        positions.append(u.copy())
        losses.append(loss_val)
        aligns.append(alignment_report(u, target))
        gaps.append(float(np.linalg.norm(a - a_star)))

    def partial() -> RunRecord:
        return RunRecord(
            times=np.array(times),
            weights=np.array(weights),
            positions=np.array(positions),
            losses=np.array(losses),
            alignment=np.array(aligns),
            best_response_gap=np.array(gaps),
        )

    da, du, loss_prev = rhs(a, u)
    snapshot(0.0, loss_prev)
    n_steps = _steps(config)
    dt = config.dt
    for step in range(1, n_steps + 1):
        k1a, k1u = da, du
        k2a, k2u, _ = rhs(a + 0.5 * dt * k1a, u + 0.5 * dt * k1u)
        k3a, k3u, _ = rhs(a + 0.5 * dt * k2a, u + 0.5 * dt * k2u)
        k4a, k4u, _ = rhs(a + dt * k3a, u + dt * k3u)
        a = a + (dt / 6.0) * (k1a + 2.0 * k2a + 2.0 * k3a + k4a)
        u = u + (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u)
        if _kernels.min_gap_kernel(u, eta) <= 2.0 * eta:
            raise FlowAbort(
                f"left the admissible set at time {step * dt:g} "
                f"(min gap {quadratic.min_gap(u, eta):.3e})",
                partial(),
            )
        da, du, loss_cur = rhs(a, u)
        if loss_cur > loss_prev + 1e-6:
            raise FlowAbort(
                f"loss increased by {loss_cur - loss_prev:.3e} at time {step * dt:g}; "
                "step size too large",
                partial(),
            )
        loss_prev = loss_cur
        if step % config.record_every == 0 or step == n_steps:
            snapshot(step * dt, loss_cur)
    return partial()
