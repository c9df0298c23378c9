"""Initial-condition profiles shared by the kinetic and hydrodynamic solvers."""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ParameterError
from .grid import Grid1D
from .model import MomentState


class InitialKind(enum.Enum):
    UNIFORM = "uniform"
    GAUSSIAN_BUMP = "gaussian_bump"
    SINE = "sine"
    SOD = "sod"
    TABULATED = "tabulated"


def _vec3(u) -> tuple[float, float, float]:
    u = tuple(float(c) for c in np.asarray(u, dtype=float).reshape(3))
    return u


@dataclass(frozen=True)
class InitialCondition:
    """Density, velocity and temperature profile at t = 0.

    ``uniform``        rho, u, T everywhere.
    ``gaussian_bump``  rho + amplitude * exp(-(x - center)^2 / (2 width^2)).
    ``sine``           rho + amplitude * sin(2 pi modes (x - x_min) / L).
    ``sod``            (rho, u, T) left of ``center``, (right_rho, right_u, right_T) right of it.
    ``tabulated``      linear interpolation of a CSV with columns x,rho,ux,uy,uz,T.

    With ``isobaric`` the bump/sine temperature is rescaled so that rho T is uniform.
    """

    kind: InitialKind = InitialKind.UNIFORM
    rho: float = 1.0
    u: tuple[float, float, float] = (0.0, 0.0, 0.0)
    T: float = 1.0
    amplitude: float = 0.0
    center: float = 0.5
    width: float = 0.1
    modes: int = 1
    isobaric: bool = False
    right_rho: float = 0.125
    right_u: tuple[float, float, float] = (0.0, 0.0, 0.0)
    right_T: float = 0.8
    table: str | None = None
    _table_data: tuple | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "kind", InitialKind(self.kind))
        object.__setattr__(self, "u", _vec3(self.u))
        object.__setattr__(self, "right_u", _vec3(self.right_u))
        if not self.rho > 0:
            raise ParameterError("initial.rho", f"must be > 0, got {self.rho!r}")
        if not self.T >= 0:
            raise ParameterError("initial.T", f"must be >= 0, got {self.T!r}")
        if self.kind is InitialKind.SOD and not (self.right_rho > 0 and self.right_T >= 0):
            raise ParameterError("initial.right_rho", "right state needs rho > 0 and T >= 0")
        if self.kind in (InitialKind.SINE, InitialKind.GAUSSIAN_BUMP):
            if self.kind is InitialKind.SINE and not abs(self.amplitude) < self.rho:
                raise ParameterError("initial.amplitude", "sine amplitude must be smaller than rho")
            if self.kind is InitialKind.GAUSSIAN_BUMP and not self.width > 0:
                raise ParameterError("initial.width", f"must be > 0, got {self.width!r}")
            if self.kind is InitialKind.GAUSSIAN_BUMP and self.amplitude <= -self.rho:
                raise ParameterError("initial.amplitude", "bump would make the density non-positive")
        if self.kind is InitialKind.TABULATED:
            if not self.table:
                raise ParameterError("initial.table", "tabulated initial condition needs a file path")
            object.__setattr__(self, "_table_data", _load_table(Path(self.table)))

    @property
    def is_uniform(self) -> bool:
        return self.kind is InitialKind.UNIFORM or (
            self.kind in (InitialKind.SINE, InitialKind.GAUSSIAN_BUMP) and self.amplitude == 0
        )

    def uniform_state(self) -> MomentState:
        if not self.is_uniform:
            raise ParameterError("initial.kind", f"{self.kind.value} is not spatially uniform")
        return MomentState(self.rho, np.array(self.u), self.T)

    def fields(self, x, grid: Grid1D | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Point values ``(rho, u, T)`` with shapes (N,), (N, 3), (N,)."""
        x = np.asarray(x, dtype=float)
        ones = np.ones_like(x)
        u = np.broadcast_to(np.array(self.u), x.shape + (3,)).copy()
        T = self.T * ones
        kind = self.kind
        if kind is InitialKind.UNIFORM:
            return self.rho * ones, u, T
        if kind is InitialKind.GAUSSIAN_BUMP:
            rho = self.rho + self.amplitude * np.exp(-((x - self.center) ** 2) / (2 * self.width**2))
        elif kind is InitialKind.SINE:
            x0, L = (0.0, 1.0) if grid is None else (grid.x_min, grid.length)
            rho = self.rho + self.amplitude * np.sin(2 * math.pi * self.modes * (x - x0) / L)
        elif kind is InitialKind.SOD:
            left = x < self.center
            rho = np.where(left, self.rho, self.right_rho)
            u = np.where(left[:, None], np.array(self.u), np.array(self.right_u))
            T = np.where(left, self.T, self.right_T)
            return rho, u, T
        else:
            tx, trho, tu, tT = self._table_data
            rho = np.interp(x, tx, trho)
            u = np.stack([np.interp(x, tx, tu[:, k]) for k in range(3)], axis=-1)
            return rho, u, np.interp(x, tx, tT)
        if self.isobaric:
            T = self.T * self.rho / rho
        return rho, u, T

    def total_mass(self, grid: Grid1D) -> float:
        return float(np.sum(grid.cell_average(lambda x: self.fields(x, grid)[0])) * grid.dx)


def _load_table(path: Path):
    try:
        with path.open(newline="") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise ParameterError("initial.table", f"cannot read {path}: {exc}") from exc
    need = ("x", "rho", "ux", "uy", "uz", "T")
    if not rows or any(k not in rows[0] for k in need):
        raise ParameterError("initial.table", f"{path} needs columns {','.join(need)}")
    data = np.array([[float(r[k]) for k in need] for r in rows])
    data = data[np.argsort(data[:, 0])]
    if np.any(data[:, 1] <= 0) or np.any(data[:, 5] < 0):
        raise ParameterError("initial.table", "tabulated rho must be > 0 and T >= 0")
    return data[:, 0], data[:, 1], data[:, 2:5], data[:, 5]
