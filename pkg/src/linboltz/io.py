"""CSV snapshot formats (17 significant digits, ``nan`` for undefined values)."""

from __future__ import annotations

import csv
import math
from pathlib import Path

import numpy as np

FIELD_HEADER = ["t", "cell", "x_center", "rho", "ux", "uy", "uz", "T", "S"]
DSMC_HEADER = FIELD_HEADER + ["n_particles"]
SIGMA_HEADER = ["t", "cell", "rho", "ux", "uy", "uz", "T"]
TRAJECTORY_HEADER = ["t", "ux", "uy", "uz", "T", "S"]
COLLISION_HEADER = ["step", "collisions", "candidates"]


def fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".17g")


def write_rows(path: Path, header: list[str], rows) -> None:
    with Path(path).open("w", newline="") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def read_table(path: Path) -> dict[str, np.ndarray]:
    with Path(path).open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = np.array([[float(v) for v in row] for row in reader], dtype=float)
    if data.size == 0:
        data = data.reshape(0, len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def dsmc_rows(result):
    grid = result.grid
    centers = grid.centers if grid is not None else np.array([math.nan])
    for snap in result.snapshots:
        m = snap.moments
        for c in range(len(m.rho)):
            yield (
                snap.t, c, centers[c], m.rho[c], m.u[c, 0], m.u[c, 1], m.u[c, 2], m.T[c], snap.S[c], int(m.count[c]),
            )


def sigma_rows(result):
    for snap in result.snapshots:
        s = snap.sigma
        for c in range(len(s["rho"])):
            yield (snap.t, c, s["rho"][c], s["ux"][c], s["uy"][c], s["uz"][c], s["T"][c])


def euler_rows(result):
    centers = result.grid.centers
    for k, t in enumerate(result.times):
        for c in range(result.grid.n_cells):
            u = result.u[k, c]
            yield (t, c, centers[c], result.rho[k, c], u[0], u[1], u[2], result.T[k, c], result.S[k, c])


def trajectory_rows(traj):
    for k, t in enumerate(traj.t):
        yield (t, traj.u[k, 0], traj.u[k, 1], traj.u[k, 2], traj.T[k], traj.S[k])
