"""Trajectory records shared by the ODE integrators and SGD.

A record holds time-stamped snapshots of the weights and positions together
with the exact loss and the per-discontinuity alignment distances.  CSV
serialization is deterministic: 17 significant digits, fixed column order
(time, loss, weights, positions, alignment, then the optional best-response
gap), so identical runs produce byte-identical files.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["RunRecord"]

_FMT = "%.17g"


@dataclass(frozen=True)
class RunRecord:
    times: np.ndarray
    weights: np.ndarray
    positions: np.ndarray
    losses: np.ndarray
    alignment: np.ndarray
    best_response_gap: np.ndarray | None = None

    def __post_init__(self):
        times = np.asarray(self.times, dtype=float)
        weights = np.atleast_2d(np.asarray(self.weights, dtype=float))
        positions = np.atleast_2d(np.asarray(self.positions, dtype=float))
        losses = np.asarray(self.losses, dtype=float)
        alignment = np.atleast_2d(np.asarray(self.alignment, dtype=float))
        n = times.size
        if not (weights.shape[0] == positions.shape[0] == losses.size == alignment.shape[0] == n):
            raise ValueError("inconsistent snapshot counts")
        if n > 1 and not np.all(np.diff(times) > 0):
            raise ValueError("snapshot times must be strictly increasing")
        gap = self.best_response_gap
        if gap is not None:
            gap = np.asarray(gap, dtype=float)
            if gap.size != n:
                raise ValueError("inconsistent snapshot counts")
        for name, arr in (
            ("times", times),
            ("weights", weights),
            ("positions", positions),
            ("losses", losses),
            ("alignment", alignment),
            ("best_response_gap", gap),
        ):
            object.__setattr__(self, name, arr)

    def __len__(self) -> int:
        return self.times.size

    @property
    def final_weights(self) -> np.ndarray:
        return self.weights[-1]

    @property
    def final_positions(self) -> np.ndarray:
        return self.positions[-1]

    @property
    def final_loss(self) -> float:
        return float(self.losses[-1])

    @property
    def final_alignment(self) -> np.ndarray:
        return self.alignment[-1]

    def header(self) -> list[str]:
        cols = ["time", "loss"]
        cols += [f"a{j}" for j in range(self.weights.shape[1])]
        cols += [f"u{j + 1}" for j in range(self.positions.shape[1])]
        cols += [f"align{i + 1}" for i in range(self.alignment.shape[1])]
        if self.best_response_gap is not None:
            cols.append("best_response_gap")
        return cols

    def to_csv(self, path) -> None:
        path = Path(path)
        blocks = [self.times[:, None], self.losses[:, None], self.weights, self.positions, self.alignment]
        if self.best_response_gap is not None:
            blocks.append(self.best_response_gap[:, None])
        table = np.hstack(blocks)
        lines = [",".join(self.header())]
        for row in table:
            lines.append(",".join(_FMT % v for v in row))
        path.write_text("\n".join(lines) + "\n")

    @classmethod
    def from_csv(cls, path) -> "RunRecord":
        import re

        path = Path(path)
        lines = path.read_text().strip().split("\n")
        cols = lines[0].split(",")
        data = np.array([[float(v) for v in line.split(",")] for line in lines[1:]])
        n_a = sum(bool(re.fullmatch(r"a\d+", c)) for c in cols)
        n_u = sum(bool(re.fullmatch(r"u\d+", c)) for c in cols)
        n_al = sum(c.startswith("align") for c in cols)
        has_gap = cols[-1] == "best_response_gap"
        i = 2
        weights = data[:, i : i + n_a]
        i += n_a
        positions = data[:, i : i + n_u]
        i += n_u
        alignment = data[:, i : i + n_al]
        i += n_al
        gap = data[:, i] if has_gap else None
        return cls(
            times=data[:, 0],
            weights=weights,
            positions=positions,
            losses=data[:, 1],
            alignment=alignment,
            best_response_gap=gap,
        )
