from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ParameterError


@dataclass(frozen=True)
class Grid1D:
    """Uniform 1D grid on [x_min, x_max)."""

    n_cells: int
    x_min: float = 0.0
    x_max: float = 1.0

    def __post_init__(self):
        if int(self.n_cells) != self.n_cells or self.n_cells < 3:
            raise ParameterError("n_cells", f"need an integer >= 3, got {self.n_cells!r}")
        if not self.x_max > self.x_min:
            raise ParameterError("x_max", f"x_max must exceed x_min ({self.x_min!r}), got {self.x_max!r}")
        object.__setattr__(self, "n_cells", int(self.n_cells))

    @property
    def length(self) -> float:
        return self.x_max - self.x_min

    @property
    def dx(self) -> float:
        return self.length / self.n_cells

    @property
    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def edges(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx

    def cell_of(self, x: np.ndarray) -> np.ndarray:
        idx = np.floor((np.asarray(x) - self.x_min) / self.dx).astype(np.int64)
        return np.clip(idx, 0, self.n_cells - 1)

    def cell_average(self, fn, nodes: int = 4) -> np.ndarray:
        """Gauss-Legendre cell averages of ``fn(x)``; ``fn`` may return extra trailing axes."""
        xi, wi = np.polynomial.legendre.leggauss(nodes)
        x = self.centers[:, None] + 0.5 * self.dx * xi[None, :]
        vals = np.asarray(fn(x.ravel()))
        vals = vals.reshape((self.n_cells, nodes) + vals.shape[1:])
        w = (0.5 * wi).reshape((1, nodes) + (1,) * (vals.ndim - 2))
        return np.sum(vals * w, axis=1)
