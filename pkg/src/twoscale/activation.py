"""Non-linearity family: sharpened smooth sigmoid, its step limit, and ReLU.

The smooth base sigmoid is a piecewise cubic that is 0 below -1/2, 1 above
1/2, odd around (0, 1/2), and continuously differentiable:

    s(t) = clip(4 (t + 1/2)^3, 0, 1/2) + clip(1/2 - 4 (1/2 - t)^3, 0, 1/2)

A sharpness scale eta > 0 rescales it to s(t / eta), so the transition window
has width eta.  The eta -> 0 limit is the unit step with value 1/2 at 0.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = ["Activation", "smooth_sigmoid", "heaviside", "relu", "base_sigmoid"]

SMOOTH = "smooth-sigmoid"
HEAVISIDE = "heaviside"
RELU = "relu"


def base_sigmoid(t):
    t = np.asarray(t, dtype=float)
    rise = t + 0.5
    fall = 0.5 - t
    out = np.clip(4.0 * rise * rise * rise, 0.0, 0.5) + np.clip(
        0.5 - 4.0 * fall * fall * fall, 0.0, 0.5
    )
    return out if out.ndim else float(out)


def _base_sigmoid_prime(t):
    t = np.asarray(t, dtype=float)
    at = np.abs(t)
    out = np.where(at < 0.5, 12.0 * (0.5 - at) ** 2, 0.0)
    return out if out.ndim else float(out)


def _base_sigmoid_cumulative(t):
    """Integral of the base sigmoid from -1/2 to t, in closed form."""
    t = np.asarray(t, dtype=float)
    tc = np.clip(t, -0.5, 0.5)
    left = (tc + 0.5) ** 4
    right = tc + (0.5 - tc) ** 4
    out = np.where(tc <= 0.0, left, right) + np.maximum(t - 0.5, 0.0)
    return out if out.ndim else float(out)


@lru_cache(maxsize=None)
def _base_sigmoid_sq_integral() -> float:
    """Integral of the squared base sigmoid over its window, by quadrature.

    Computed once and cached; it is the only activation-dependent constant in
    the exact quadratic loss (the diagonal window correction of the Gram
    matrix is eta * (this - 1/2) independently of the positions).
    """
    from scipy.integrate import quad

    val, _ = quad(lambda t: base_sigmoid(t) ** 2, -0.5, 0.5, points=[0.0], epsabs=1e-14)
    return val


@dataclass(frozen=True)
class Activation:
    """One member of the non-linearity family.

    kind is one of "smooth-sigmoid" (requires eta > 0), "heaviside" (eta is
    exactly 0) or "relu" (eta unused).
    """

    kind: str
    eta: float = 0.0

    def __post_init__(self):
        if self.kind not in (SMOOTH, HEAVISIDE, RELU):
            raise ValueError(f"unknown activation kind {self.kind!r}")
        if self.kind == SMOOTH and self.eta <= 0.0:
            raise ValueError("smooth-sigmoid requires eta > 0")
        if self.kind == HEAVISIDE and self.eta != 0.0:
            raise ValueError("heaviside has eta = 0 by definition")

    @property
    def is_smooth(self) -> bool:
        return self.kind == SMOOTH

    def value(self, x):
        if self.kind == SMOOTH:
            return base_sigmoid(np.asarray(x, dtype=float) / self.eta)
        if self.kind == HEAVISIDE:
            x = np.asarray(x, dtype=float)
            out = np.where(x > 0.0, 1.0, np.where(x < 0.0, 0.0, 0.5))
            return out if out.ndim else float(out)
        out = np.maximum(np.asarray(x, dtype=float), 0.0)
        return out if out.ndim else float(out)

    def derivative(self, x):
        if self.kind == SMOOTH:
            return _base_sigmoid_prime(np.asarray(x, dtype=float) / self.eta) / self.eta
        if self.kind == RELU:
            # Subgradient 0 at the kink: a measure-zero event under continuous sampling.
            x = np.asarray(x, dtype=float)
            out = (x > 0.0).astype(float)
            return out if out.ndim else float(out)
        raise ValueError("the step activation has no pointwise derivative")

    def cumulative(self, x):
        """Integral of the activation from the left edge of its window to x."""
        if self.kind == SMOOTH:
            return self.eta * _base_sigmoid_cumulative(np.asarray(x, dtype=float) / self.eta)
        if self.kind == HEAVISIDE:
            out = np.maximum(np.asarray(x, dtype=float), 0.0)
            return out if out.ndim else float(out)
        x = np.asarray(x, dtype=float)
        out = np.maximum(x, 0.0) ** 2 / 2.0
        return out if out.ndim else float(out)

    @property
    def sq_window_integral(self) -> float:
        """Integral of the squared base sigmoid over [-1/2, 1/2]."""
        if self.kind != SMOOTH:
            raise ValueError("window integral only defined for the smooth sigmoid")
        return _base_sigmoid_sq_integral()


def smooth_sigmoid(eta: float) -> Activation:
    return Activation(SMOOTH, eta)


def heaviside() -> Activation:
    return Activation(HEAVISIDE, 0.0)


def relu() -> Activation:
    return Activation(RELU, 0.0)
