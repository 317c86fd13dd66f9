"""Ground-truth target functions on [0, 1].

The main type is a piecewise-constant staircase with strictly increasing
breakpoints pinned to 0 and 1.  An additive variant sums one staircase per
input axis, and a continuous piecewise-affine variant (a small ReLU network)
supports the ReLU experiments.  All types are immutable and evaluate
vectorized; staircases also integrate themselves (and their square) in closed
form, which the exact-loss machinery relies on.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "ClassParams",
    "PiecewiseConstantTarget",
    "AdditiveTarget",
    "ReluAffineTarget",
    "validate_class",
    "sample_target",
]


@dataclass(frozen=True)
class ClassParams:
    """Parameters of a staircase class: piece count, minimum piece length,
    minimum jump height, and sup-norm bound."""

    n: int
    min_piece: float
    min_jump: float
    sup_bound: float

    def __post_init__(self):
        if self.n < 2:
            raise ValueError(f"need at least 2 pieces, got n={self.n}")
        if not 0.0 < self.min_piece < 1.0:
            raise ValueError(f"min_piece must lie in (0, 1), got {self.min_piece}")
        if self.min_jump <= 0.0:
            raise ValueError(f"min_jump must be positive, got {self.min_jump}")
        if self.sup_bound < 1.0:
            raise ValueError(f"sup_bound must be >= 1, got {self.sup_bound}")


@dataclass(frozen=True)
class PiecewiseConstantTarget:
    """Right-continuous staircase on [0, 1].

    ``breakpoints`` has length n+1 with breakpoints[0] == 0 and
    breakpoints[-1] == 1; ``values`` holds the n piece levels.  At an interior
    breakpoint the evaluation returns the right piece; at x == 1 it returns
    the last piece.
    """

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        vals = np.asarray(self.values, dtype=float)
        if bp.ndim != 1 or vals.ndim != 1 or bp.size != vals.size + 1:
            raise ValueError("need n+1 breakpoints for n values")
        if vals.size < 1:
            raise ValueError("need at least one piece")
        if bp[0] != 0.0 or bp[-1] != 1.0:
            raise ValueError("breakpoints must start at 0 and end at 1 exactly")
        if not np.all(np.diff(bp) > 0):
            raise ValueError("breakpoints must be strictly increasing")
        if np.any(np.diff(vals) == 0.0):
            raise ValueError("adjacent pieces must have different values")
        bp.flags.writeable = False
        vals.flags.writeable = False
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", vals)

    @property
    def n_pieces(self) -> int:
        return self.values.size

    @property
    def interior_breakpoints(self) -> np.ndarray:
        """The n-1 discontinuity locations."""
        return self.breakpoints[1:-1]

    @property
    def jumps(self) -> np.ndarray:
        """Signed jump heights at the interior breakpoints."""
        return np.diff(self.values)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        idx = np.searchsorted(self.breakpoints, x, side="right") - 1
        idx = np.clip(idx, 0, self.n_pieces - 1)
        out = self.values[idx]
        return out if out.ndim else float(out)

    @cached_property
    def _cum_integral(self) -> np.ndarray:
        """Cumulative integral of the target at each breakpoint."""
        return np.concatenate(([0.0], np.cumsum(self.values * np.diff(self.breakpoints))))

    @cached_property
    def _cum_integral_sq(self) -> np.ndarray:
        return np.concatenate(([0.0], np.cumsum(self.values**2 * np.diff(self.breakpoints))))

    @cached_property
    def _values_sq(self) -> np.ndarray:
        return self.values**2

    def cumulative(self, x, power: int = 1):
        """Vectorized cumulative integral of the target (or its square) from 0
        to x, for x inside [0, 1]."""
        x = np.asarray(x, dtype=float)
        idx = np.clip(np.searchsorted(self.breakpoints, x, side="right") - 1, 0, self.n_pieces - 1)
        if power == 1:
            table, levels = self._cum_integral, self.values
        elif power == 2:
            table, levels = self._cum_integral_sq, self._values_sq
        else:
            raise ValueError("power must be 1 or 2")
        out = table[idx] + levels[idx] * (x - self.breakpoints[idx])
        return out if out.ndim else float(out)

    def integral(self, x_lo: float, x_hi: float, power: int = 1) -> float:
        """Exact integral of the target (power=1) or its square (power=2) over
        [x_lo, x_hi] inside [0, 1]."""
        if not 0.0 <= x_lo <= x_hi <= 1.0:
            raise ValueError(f"need 0 <= x_lo <= x_hi <= 1, got [{x_lo}, {x_hi}]")
        return self.cumulative(x_hi, power) - self.cumulative(x_lo, power)

    def to_config_text(self) -> str:
        """Serialize as TOML-style text with full-precision decimal floats."""
        bp = ", ".join(repr(float(v)) for v in self.breakpoints)
        vals = ", ".join(repr(float(v)) for v in self.values)
        return f"breakpoints = [{bp}]\nvalues = [{vals}]\n"

    @classmethod
    def from_config_text(cls, text: str) -> "PiecewiseConstantTarget":
        import tomli

        data = tomli.loads(text)
        return cls(np.asarray(data["breakpoints"], float), np.asarray(data["values"], float))


@dataclass(frozen=True)
class AdditiveTarget:
    """Sum of one univariate staircase per input axis, on [0, 1]^d."""

    components: tuple

    def __post_init__(self):
        comps = tuple(self.components)
        if len(comps) < 1:
            raise ValueError("need at least one axis")
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return len(self.components)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if x.ndim == 1:
            if x.size != self.dim:
                raise ValueError(f"expected {self.dim} coordinates, got {x.size}")
            return float(sum(g(x[k]) for k, g in enumerate(self.components)))
        if x.ndim != 2 or x.shape[1] != self.dim:
            raise ValueError(f"expected shape (N, {self.dim}), got {x.shape}")
        out = np.zeros(x.shape[0])
        for k, g in enumerate(self.components):
            out += g(x[:, k])
        return out


@dataclass(frozen=True)
class ReluAffineTarget:
    """Continuous piecewise-affine target: a fixed one-layer ReLU network
    with given knot positions and per-knot slope increments (zero bias)."""

    knots: np.ndarray
    slopes: np.ndarray

    def __post_init__(self):
        knots = np.asarray(self.knots, dtype=float)
        slopes = np.asarray(self.slopes, dtype=float)
        if knots.shape != slopes.shape or knots.ndim != 1:
            raise ValueError("knots and slopes must be 1-d arrays of equal length")
        knots.flags.writeable = False
        slopes.flags.writeable = False
        object.__setattr__(self, "knots", knots)
        object.__setattr__(self, "slopes", slopes)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.maximum(x[..., None] - self.knots, 0.0) @ self.slopes
        return out if out.ndim else float(out)


def validate_class(target: PiecewiseConstantTarget, params: ClassParams):
    """Check the four class conditions; returns (ok, violations).

    Violations are reported as human-readable strings instead of raising.
    """
    violations = []
    if target.n_pieces != params.n:
        violations.append(f"target has {target.n_pieces} pieces, class requires {params.n}")
    lengths = np.diff(target.breakpoints)
    for i, length in enumerate(lengths):
        if length < params.min_piece - 1e-15:
            lo, hi = target.breakpoints[i], target.breakpoints[i + 1]
            violations.append(f"piece ({lo:g},{hi:g}) shorter than {params.min_piece:g}")
    for i, jump in enumerate(np.abs(target.jumps)):
        if jump < params.min_jump - 1e-15:
            violations.append(
                f"jump at {target.breakpoints[i + 1]:g} has height {jump:g} < {params.min_jump:g}"
            )
    sup = float(np.max(np.abs(target.values)))
    if sup > params.sup_bound + 1e-15:
        violations.append(f"sup-norm {sup:g} exceeds bound {params.sup_bound:g}")
    return len(violations) == 0, violations


def sample_target(params: ClassParams, rng: np.random.Generator, max_retries: int = 10_000):
    """Draw a random member of the class.

    Breakpoints get the minimum piece length plus a uniform split of the
    slack; levels are uniform in [-sup_bound, sup_bound] with adjacent pairs
    redrawn until the jump condition holds (capped at ``max_retries`` draws).
    """
    n = params.n
    slack = 1.0 - n * params.min_piece
    if slack < -1e-12:
        raise ValueError(f"infeasible: {n} pieces of length >= {params.min_piece} exceed [0, 1]")
    if params.min_jump > 2 * params.sup_bound:
        raise ValueError("infeasible: min_jump exceeds the attainable 2*sup_bound")
    slack = max(slack, 0.0)

    # Uniform split of the slack across the n pieces (spacings of sorted uniforms).
    cuts = np.sort(rng.random(n - 1)) if n > 1 else np.empty(0)
    weights = np.diff(np.concatenate(([0.0], cuts, [1.0])))
    lengths = params.min_piece + slack * weights
    breakpoints = np.concatenate(([0.0], np.cumsum(lengths)))
    breakpoints[-1] = 1.0

    # Sequential level sampling can dead-end when a drawn level leaves no
    # admissible successor (possible for min_jump > sup_bound), so the whole
    # sequence restarts after a run of failed draws.
    values = np.empty(n)
    retries = 0
    i = 1
    values[0] = rng.uniform(-params.sup_bound, params.sup_bound)
    stuck = 0
    while i < n:
        candidate = rng.uniform(-params.sup_bound, params.sup_bound)
        if abs(candidate - values[i - 1]) >= params.min_jump:
            values[i] = candidate
            i += 1
            stuck = 0
            continue
        retries += 1
        stuck += 1
        if stuck >= 100:
            values[0] = rng.uniform(-params.sup_bound, params.sup_bound)
            i = 1
            stuck = 0
        if retries > max_retries:
            raise ValueError("level sampling exceeded the retry cap; jump constraint too tight")
    return PiecewiseConstantTarget(breakpoints, values)
