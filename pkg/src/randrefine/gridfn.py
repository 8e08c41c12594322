"""Uniformly sampled real functions with linear interpolation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from ._compat import trapezoid


@dataclass(frozen=True)
class GridFn:
    """Samples on the uniform grid ``t_min, t_min+step, ..., t_max``.

    Evaluation between nodes is linear; outside the window it is the
    constant ``left_value`` / ``right_value``.
    """

    t_min: float
    t_max: float
    step: float
    values: np.ndarray
    left_value: float = 0.0
    right_value: float | None = None

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        object.__setattr__(self, "values", vals)
        n = int(round((self.t_max - self.t_min) / self.step)) + 1
        if vals.ndim != 1 or len(vals) != n:
            raise ValueError(
                f"expected {n} samples on [{self.t_min}, {self.t_max}] "
                f"at step {self.step}, got {vals.shape}"
            )
        if self.right_value is None:
            object.__setattr__(self, "right_value", float(vals[-1]))

    @property
    def nodes(self) -> np.ndarray:
        return np.linspace(self.t_min, self.t_max, len(self.values))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = np.interp(
            t, self.nodes, self.values,
            left=self.left_value, right=self.right_value,
        )
        return out if out.shape else float(out)

    @classmethod
    def from_function(
        cls,
        fn: Callable[[np.ndarray], np.ndarray],
        t_min: float,
        t_max: float,
        step: float,
        left_value: float = 0.0,
        right_value: float | None = None,
    ) -> "GridFn":
        n = int(round((t_max - t_min) / step)) + 1
        nodes = np.linspace(t_min, t_max, n)
        return cls(t_min, t_max, step, np.asarray(fn(nodes), dtype=float),
                   left_value, right_value)

    def l1_norm(self) -> float:
        """Trapezoid integral of |values| over the window."""
        return float(trapezoid(np.abs(self.values), dx=self.step))
