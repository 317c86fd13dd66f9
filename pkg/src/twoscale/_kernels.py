"""Compiled inner loops for the long flow integrations.

These duplicate the closed forms of the quadratic/network modules in scalar
form so the fixed-step integrators can take hundreds of thousands of steps in
seconds.  They are not public API: the numpy implementations remain the
reference, and the test suite pins the two against each other on random
admissible configurations.

All kernels assume admissible positions (disjoint transition windows inside
the domain); the integrators enforce that per step.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def _sigma(t):
    return min(max(4.0 * (t + 0.5) ** 3, 0.0), 0.5) + min(max(0.5 - 4.0 * (0.5 - t) ** 3, 0.0), 0.5)


@njit(cache=True)
def _sigma_cum(t):
    # Integral of the base sigmoid from -1/2 to t.
    if t <= -0.5:
        return 0.0
    if t <= 0.0:
        return (t + 0.5) ** 4
    if t <= 0.5:
        return t + (0.5 - t) ** 4
    return t


@njit(cache=True)
def _piece_index(x, bp):
    i = np.searchsorted(bp, x, side="right") - 1
    if i < 0:
        i = 0
    n_pieces = bp.shape[0] - 2
    if i > n_pieces:
        i = n_pieces
    return i


@njit(cache=True)
def _cum_target(x, bp, vals, cumtab):
    i = _piece_index(x, bp)
    return cumtab[i] + vals[i] * (x - bp[i])


@njit(cache=True)
def _gram(u, eta, dcorr):
    m = u.shape[0]
    H = np.empty((m + 1, m + 1))
    H[0, 0] = 1.0
    for i in range(m):
        ci = max(u[i], 0.0)
        H[0, i + 1] = 1.0 - ci
        H[i + 1, 0] = H[0, i + 1]
        for j in range(i, m):
            c = max(max(u[i], u[j]), 0.0)
            H[i + 1, j + 1] = 1.0 - c
            H[j + 1, i + 1] = H[i + 1, j + 1]
        H[i + 1, i + 1] += dcorr
    return H


@njit(cache=True)
def _linear(u, eta, bp, vals, cumtab):
    m = u.shape[0]
    total = cumtab[bp.shape[0] - 1]
    b = np.empty(m + 1)
    b[0] = total
    for j in range(m):
        lo = u[j] - eta / 2.0
        hi = u[j] + eta / 2.0
        if lo < 0.0:
            lo = 0.0
        if hi > 1.0:
            hi = 1.0
        acc = total - _cum_target(hi, bp, vals, cumtab)
        x1 = lo
        i = _piece_index(lo, bp)
        while x1 < hi:
            x2 = min(bp[i + 1], hi)
            acc += (
                vals[i]
                * eta
                * (_sigma_cum((x2 - u[j]) / eta) - _sigma_cum((x1 - u[j]) / eta))
            )
            x1 = x2
            i += 1
        b[j + 1] = acc
    return b


@njit(cache=True)
def _position_grad(a, u, eta, bp, vals):
    m = u.shape[0]
    order = np.argsort(u)
    grad = np.zeros(m)
    prefix = a[0]
    for k in range(m):
        j = order[k]
        aw = a[j + 1]
        lo = u[j] - eta / 2.0
        hi = u[j] + eta / 2.0
        if lo < 0.0:
            lo = 0.0
        if hi > 1.0:
            hi = 1.0
        acc = 0.0
        x1 = lo
        i = _piece_index(lo, bp)
        while x1 < hi:
            x2 = min(bp[i + 1], hi)
            s1 = _sigma((x1 - u[j]) / eta)
            s2 = _sigma((x2 - u[j]) / eta)
            acc += (prefix - vals[i]) * (s2 - s1) + 0.5 * aw * (s2 * s2 - s1 * s1)
            x1 = x2
            i += 1
        grad[j] = -aw * acc
        prefix += aw
    return grad


@njit(cache=True)
def full_flow_rhs(a, u, eta, dcorr, bp, vals, cumtab, half_sq, epsilon):
    """(-grad_a, -epsilon * grad_u, loss) of the exact population objective."""
    H = _gram(u, eta, dcorr)
    b = _linear(u, eta, bp, vals, cumtab)
    grad_a = H @ a - b
    loss = 0.5 * (a @ (grad_a - b)) + half_sq
    du = -epsilon * _position_grad(a, u, eta, bp, vals)
    return -grad_a, du, loss


@njit(cache=True)
def best_response(u, eta, dcorr, bp, vals, cumtab):
    H = _gram(u, eta, dcorr)
    b = _linear(u, eta, bp, vals, cumtab)
    return np.linalg.solve(H, b)


@njit(cache=True)
def smooth_field(u, eta, dcorr, bp, vals, cumtab, half_sq):
    """Negative position-gradient at the best response, plus that response
    and the limit loss."""
    H = _gram(u, eta, dcorr)
    b = _linear(u, eta, bp, vals, cumtab)
    a = np.linalg.solve(H, b)
    loss = 0.5 * (a @ (H @ a)) - b @ a + half_sq
    du = -_position_grad(a, u, eta, bp, vals)
    return du, a, loss


@njit(cache=True)
def min_gap_kernel(u, eta):
    us = np.sort(u)
    g = us[0] + eta / 2.0
    for i in range(us.shape[0] - 1):
        d = us[i + 1] - us[i]
        if d < g:
            g = d
    d = 1.0 + eta / 2.0 - us[us.shape[0] - 1]
    if d < g:
        g = d
    return g
