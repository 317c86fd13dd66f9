"""Slow, independent reference computations.

Everything here is deliberately naive: dense grids, central differences,
recursive Simpson quadrature.  These are the yardsticks the closed-form code
is certified against, so they must not share machinery with it.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import network, quadratic
from .activation import Activation, heaviside, smooth_sigmoid
from .targets import ClassParams, PiecewiseConstantTarget, sample_target

__all__ = [
    "OracleReport",
    "grid_least_squares",
    "fd_gradient",
    "adaptive_simpson",
    "riemann_integral",
    "sample_admissible_positions",
    "lemma_suite",
    "format_report_table",
    "reports_to_csv",
]


@dataclass(frozen=True)
class OracleReport:
    """One verified inequality or value comparison.

    ``computed`` is the worst observed value of the checked quantity and
    ``reference`` the bound it must stay below (after subtracting, both are
    reported as given); pass/fail is computed - reference <= tol.
    """

    name: str
    computed: float
    reference: float
    tol: float
    passed: bool

    @property
    def abs_error(self) -> float:
        return abs(self.computed - self.reference)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.reference), 1e-300)
        return self.abs_error / scale


def format_report_table(reports) -> str:
    width = max(len(r.name) for r in reports) + 2
    lines = [f"{'check':<{width}} {'worst value':>14} {'bound':>14} {'tol':>10}  status"]
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        lines.append(
            f"{r.name:<{width}} {r.computed:>14.6e} {r.reference:>14.6e} {r.tol:>10.1e}  {status}"
        )
    return "\n".join(lines)


def reports_to_csv(reports, path) -> None:
    lines = ["name,computed,reference,abs_error,rel_error,tol,passed"]
    for r in reports:
        lines.append(
            f"{r.name},{r.computed:.17g},{r.reference:.17g},{r.abs_error:.17g},"
            f"{r.rel_error:.17g},{r.tol:.17g},{int(r.passed)}"
        )
    Path(path).write_text("\n".join(lines) + "\n")


def grid_least_squares(u, target, act: Activation, grid_points: int) -> np.ndarray:
    """Least-squares weights on a uniform midpoint grid via the discrete
    normal equations; raises on a singular normal matrix (e.g. duplicated
    positions with the step activation)."""
    u = np.asarray(u, dtype=float)
    xs = (np.arange(grid_points) + 0.5) / grid_points
    X = np.empty((grid_points, u.size + 1))
    X[:, 0] = 1.0
    X[:, 1:] = act.value(xs[:, None] - u[None, :])
    G = X.T @ X / grid_points
    rhs = X.T @ np.asarray(target(xs), dtype=float) / grid_points
    cond = np.linalg.cond(G)
    if not np.isfinite(cond) or cond > 1e14:
        raise ValueError(f"singular normal matrix (condition number {cond:.3e})")
    return np.linalg.solve(G, rhs)


def fd_gradient(fn, point, step: float = 1e-6) -> np.ndarray:
    """Central finite differences of a scalar function, component-wise."""
    point = np.asarray(point, dtype=float)
    grad = np.empty(point.size)
    for i in range(point.size):
        hi = point.copy()
        lo = point.copy()
        hi[i] += step
        lo[i] -= step
        grad[i] = (fn(hi) - fn(lo)) / (2.0 * step)
    return grad


def _simpson_rule(a, fa, b, fb, fm):
    return (b - a) / 6.0 * (fa + 4.0 * fm + fb)


def _simpson_rec(fn, a, fa, b, fb, m, fm, whole, tol, depth):
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm, frm = fn(lm), fn(rm)
    left = _simpson_rule(a, fa, m, fm, flm)
    right = _simpson_rule(m, fm, b, fb, frm)
    if depth <= 0 or abs(left + right - whole) <= 15.0 * tol:
        return left + right + (left + right - whole) / 15.0
    return _simpson_rec(fn, a, fa, m, fm, lm, flm, left, tol / 2.0, depth - 1) + _simpson_rec(
        fn, m, fm, b, fb, rm, frm, right, tol / 2.0, depth - 1
    )


def adaptive_simpson(fn, a: float, b: float, tol: float = 1e-12, points=(), max_depth: int = 40):
    """Recursive Simpson quadrature; optional interior split points for
    integrands with kinks or jumps."""
    inner = [p for p in points if a < p < b]
    cuts = np.unique(np.concatenate(([a, b], inner))) if inner else np.array([a, b])
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        m = 0.5 * (lo + hi)
        flo, fhi, fm = fn(lo), fn(hi), fn(m)
        whole = _simpson_rule(lo, flo, hi, fhi, fm)
        total += _simpson_rec(fn, lo, flo, hi, fhi, m, fm, whole, tol, max_depth)
    return total


def riemann_integral(fn, a: float, b: float, n: int = 1_000_000) -> float:
    """Midpoint Riemann sum on a dense uniform grid."""
    xs = a + (np.arange(n) + 0.5) * (b - a) / n
    return float(np.sum(fn(xs)) * (b - a) / n)


def sample_admissible_positions(
    rng: np.random.Generator,
    m: int,
    target: PiecewiseConstantTarget,
    eta: float,
    min_per_piece: int = 2,
    max_tries: int = 10_000,
) -> np.ndarray:
    """Rejection-sample uniform positions with all gaps > 2*eta (boundary
    conventions included) and at least ``min_per_piece`` neurons strictly
    inside every piece."""
    bp = target.breakpoints
    for _ in range(max_tries):
        u = rng.random(m)
        if quadratic.min_gap(u, eta) <= 2.0 * eta:
            continue
        us = np.sort(u)
        counts = np.searchsorted(us, bp[1:], side="left") - np.searchsorted(us, bp[:-1], side="right")
        if np.all(counts >= min_per_piece):
            return u
    raise RuntimeError(f"no admissible configuration found in {max_tries} draws")


def random_class_params(rng: np.random.Generator, max_pieces: int = 4) -> ClassParams:
    n = int(rng.integers(2, max_pieces + 1))
    min_piece = float(rng.uniform(0.08, 0.9 / n))
    min_jump = float(rng.uniform(0.3, 1.5))
    sup = float(rng.uniform(max(1.0, min_jump / 2.0), 4.0))
    return ClassParams(n=n, min_piece=min_piece, min_jump=min_jump, sup_bound=sup)


def _quadrature_gram_entry(u_i: float, u_j: float, act: Activation) -> float:
    pts = (
        u_i - act.eta / 2,
        u_i,
        u_i + act.eta / 2,
        u_j - act.eta / 2,
        u_j,
        u_j + act.eta / 2,
    )
    return adaptive_simpson(
        lambda x: float(act.value(x - u_i)) * float(act.value(x - u_j)),
        0.0,
        1.0,
        tol=1e-14,
        points=pts,
    )


def lemma_suite(rng: np.random.Generator, trials: int = 1000):
    """Monte-Carlo certification of the supporting inequalities behind the
    convergence analysis, each over random admissible configurations.

    Each report states the worst observed slack (checked quantity minus its
    bound); negative or tiny-positive slack within tolerance passes.
    """
    worst: dict[str, float] = {}

    def update(name, value):
        worst[name] = max(worst.get(name, -np.inf), float(value))

    grid = np.linspace(0.0, 1.0, 2001)
    quad_trials = min(trials, 1000)
    jac_trials = min(trials, 100)

    for trial in range(trials):
        params = random_class_params(rng)
        target = sample_target(params, rng)
        sup = float(np.max(np.abs(target.values)))
        eta = float(rng.uniform(1e-4, 1e-2))
        # Two neurons per piece must fit, plus a little slack.
        m = 2 * params.n + int(rng.integers(1, 4))
        u = sample_admissible_positions(rng, m, target, eta, min_per_piece=2)
        gap = quadratic.min_gap(u, eta)
        act = smooth_sigmoid(eta)
        sqm = float(np.sqrt(m + 1.0))

        # Smallest Gram eigenvalue is at least an eighth of the minimum gap.
        H = quadratic.hessian(u, act)
        update("gram-eigenvalue-floor", gap / 8.0 - quadratic.min_eigenvalue(H))

        # Sharpening the activation moves the correlations by at most
        # sup * eta per coordinate.
        b_eta = quadratic.linear_term(u, act, target)
        b_0 = quadratic.linear_term(u, heaviside(), target)
        update(
            "correlation-window-shift",
            float(np.linalg.norm(b_eta - b_0)) - sup * eta * sqm,
        )

        # The window correction of the Gram matrix is diagonal and does not
        # depend on the positions: quadrature agrees with the step-limit
        # closed form off the diagonal, and the diagonal correction is flat.
        if trial < quad_trials:
            H0 = quadratic.hessian(u, heaviside())
            uu = np.concatenate(([-eta / 2.0], u))
            i = int(rng.integers(0, m + 1))
            j = int(rng.integers(0, m + 1))
            if i == j:
                j = (j + 1) % (m + 1)
            off = _quadrature_gram_entry(uu[i], uu[j], act) - H0[i, j]
            update("gram-offdiag-deviation", abs(off) - 0.0)
            update("gram-diag-spread", float(np.ptp(np.diag(H - H0)[1:])) - 0.0)

        # Best responses: sharp-vs-step shift, weight bound, sup-norm bound.
        a_eta = quadratic.best_fit(u, act, target)
        a_0 = quadratic.best_fit_heaviside(u, target)
        update(
            "best-response-window-shift",
            float(np.linalg.norm(a_eta - a_0)) - 16.0 * sup * sqm * eta / gap,
        )
        update("step-fit-weight-bound", float(np.max(np.abs(a_0))) - 2.0 * sup)
        net = a_0[0] + act.value(grid[:, None] - u[None, :]) @ a_0[1:]
        update("step-fit-sup-bound", float(np.max(np.abs(net))) - sup)

        # Differentiability of the best response, with the explicit rate.
        if trial < jac_trials:
            jac = np.empty((m + 1, m))
            fd = 1e-7
            for k in range(m):
                hi, lo = u.copy(), u.copy()
                hi[k] += fd
                lo[k] -= fd
                jac[:, k] = (
                    quadratic.best_fit(hi, act, target) - quadratic.best_fit(lo, act, target)
                ) / (2.0 * fd)
            bound = 8.0 / gap * (2.0 * (m + 1) * float(np.linalg.norm(a_eta)) + sup)
            update("best-response-jacobian", float(np.linalg.norm(jac, 2)) - bound)

        # A-priori norms of both gradient blocks and the induced loss
        # increment in the weights, at a random weight vector.
        a_rand = rng.uniform(-2.0 * sup, 2.0 * sup, m + 1)
        a_rand2 = rng.uniform(-2.0 * sup, 2.0 * sup, m + 1)
        norm_a = float(np.linalg.norm(a_rand))
        grad_u = network.position_gradient(a_rand, u, act, target)
        grad_a = H @ a_rand - b_eta
        update(
            "grad-u-norm-bound",
            float(np.linalg.norm(grad_u)) - (sqm * norm_a**2 + sup * norm_a),
        )
        update(
            "grad-a-norm-bound",
            float(np.linalg.norm(grad_a)) - sqm * (norm_a * sqm + sup),
        )
        l1 = quadratic.loss(a_rand, u, act, target)
        l2 = quadratic.loss(a_rand2, u, act, target)
        lip = sqm * (max(norm_a, float(np.linalg.norm(a_rand2))) * sqm + sup)
        update(
            "loss-increment-bound",
            abs(l1 - l2) - lip * float(np.linalg.norm(a_rand - a_rand2)),
        )

        # With a neuron within eta of every discontinuity, the best-fit
        # squared error is at most 6 sup^2 eta n.
        if 3.0 * eta <= float(np.min(np.diff(target.breakpoints))):
            interior = target.interior_breakpoints
            jitter = rng.uniform(-0.9 * eta, 0.9 * eta, interior.size)
            aligned = np.clip(interior + jitter, 2.0 * eta, 1.0 - 2.0 * eta)
            extras = sample_admissible_positions(rng, 3, target, eta, min_per_piece=0)
            u_al = np.concatenate((aligned, extras))
            if quadratic.min_gap(u_al, eta) > 2.0 * eta:
                sq_err = 2.0 * quadratic.loss(
                    quadratic.best_fit(u_al, act, target), u_al, act, target
                )
                update("aligned-fit-error", sq_err - 6.0 * sup**2 * eta * target.n_pieces)

    tols = {
        "gram-eigenvalue-floor": 1e-12,
        "correlation-window-shift": 1e-12,
        "gram-offdiag-deviation": 1e-12,
        "gram-diag-spread": 1e-12,
        "best-response-window-shift": 1e-10,
        "step-fit-weight-bound": 1e-12,
        "step-fit-sup-bound": 1e-9,
        "best-response-jacobian": 1e-6,
        "grad-u-norm-bound": 1e-10,
        "grad-a-norm-bound": 1e-10,
        "loss-increment-bound": 1e-10,
        "aligned-fit-error": 1e-12,
    }
    reports = []
    for name, slack in worst.items():
        tol = tols[name]
        reports.append(
            OracleReport(
                name=name,
                computed=slack,
                reference=0.0,
                tol=tol,
                passed=slack <= tol,
            )
        )
    return reports
