"""Direct simulation of the linear dissipative Boltzmann equation.

Each simulation particle collides with a fixed Maxwellian background: the
background partner ``w`` is drawn fresh for every collision and is never
updated, so no pair bookkeeping is needed. Within a step the per-particle
rate is frozen and the number of collisions is Poisson distributed, which
makes the collision step exact in distribution for frozen S. The hard-sphere
kernel |v - w| is realised by thinning against a majorant speed.

Random numbers come from :mod:`linboltz.rng`, addressed by
(seed, step, particle position), so the result does not depend on how the
particle array is split between workers.
"""

from __future__ import annotations

import enum
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import rng as rngmod
from .errors import MajorantViolationError, ParameterError, StepSizeError
from .grid import Grid1D
from .initial import InitialCondition
from .model import (
    BackgroundState,
    ClosureKind,
    ModelParams,
    MomentState,
    SClosure,
    _post_collision,
    collision_rate,
    effective_coefficient,
    mean_relative_speed_Z,
    sample_maxwellian,
)

UNIFORMS_PER_COLLISION = 8
_MAX_POISSON = 64


class KineticMode(enum.Enum):
    HOMOGENEOUS = "homogeneous"
    SLAB1D = "slab1d"


class KineticBC(enum.Enum):
    PERIODIC = "periodic"
    OUTFLOW = "outflow"


@dataclass
class ParticleEnsemble:
    """Simulation particles; ``x`` is ``None`` in homogeneous mode.

    ``ids`` are birth indices, kept so that sub-ensemble (batch) membership
    survives particle removal at outflow boundaries.
    """

    v: np.ndarray
    weight: float
    x: np.ndarray | None = None
    ids: np.ndarray | None = None

    def __post_init__(self):
        self.v = np.ascontiguousarray(self.v, dtype=float).reshape(-1, 3)
        if not self.weight > 0:
            raise ParameterError("weight", f"particle weight must be > 0, got {self.weight!r}")
        if self.x is not None:
            self.x = np.ascontiguousarray(self.x, dtype=float)
            if len(self.x) != len(self.v):
                raise ParameterError("x", "positions and velocities differ in length")
        if self.ids is None:
            self.ids = np.arange(len(self.v), dtype=np.int64)

    @property
    def count(self) -> int:
        return len(self.v)


@dataclass(frozen=True)
class KineticConfig:
    dt: float
    t_end: float
    n_particles: int
    seed: int = 0
    mode: KineticMode = KineticMode.HOMOGENEOUS
    grid: Grid1D | None = None
    bc: KineticBC = KineticBC.PERIODIC
    majorant: float | None = None
    majorant_sigmas: float = 6.0
    output_interval: float | None = None
    max_nu_dt: float = 0.5
    batches: int = 16
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "mode", KineticMode(self.mode))
        object.__setattr__(self, "bc", KineticBC(self.bc))
        if not self.dt > 0:
            raise ParameterError("dsmc.dt", f"must be > 0, got {self.dt!r}")
        if not self.t_end >= 0:
            raise ParameterError("dsmc.t_end", f"must be >= 0, got {self.t_end!r}")
        if int(self.n_particles) != self.n_particles or self.n_particles < 1:
            raise ParameterError("dsmc.n_particles", f"must be an integer >= 1, got {self.n_particles!r}")
        if self.mode is KineticMode.SLAB1D and self.grid is None:
            raise ParameterError("grid", "slab1d mode needs a grid")
        if self.majorant is not None and not self.majorant > 0:
            raise ParameterError("dsmc.majorant", f"must be > 0, got {self.majorant!r}")
        if not self.majorant_sigmas > 0:
            raise ParameterError("dsmc.majorant_sigmas", "must be > 0")
        if not self.max_nu_dt > 0:
            raise ParameterError("dsmc.max_nu_dt", "must be > 0")
        if self.batches < 2:
            raise ParameterError("dsmc.batches", "need at least 2 sub-ensembles")
        if self.workers < 1:
            raise ParameterError("threads", "need at least one worker")
        if self.output_interval is not None and not self.output_interval > 0:
            raise ParameterError("dsmc.output_interval", "must be > 0")

    @property
    def n_steps(self) -> int:
        return _as_steps(self.t_end, self.dt, "dsmc.t_end")

    @property
    def output_stride(self) -> int:
        if self.output_interval is None:
            return max(self.n_steps, 1)
        return max(_as_steps(self.output_interval, self.dt, "dsmc.output_interval"), 1)


def _as_steps(span: float, dt: float, name: str) -> int:
    n = round(span / dt)
    if abs(n * dt - span) > 1e-9 * max(span, dt):
        raise ParameterError(name, f"{span!r} is not a whole number of steps of dt={dt!r}")
    return int(n)


# --- moments --------------------------------------------------------------------------


@dataclass
class CellMoments:
    """Per-cell moments; ``nan`` marks undefined entries, the masks say which."""

    rho: np.ndarray
    u: np.ndarray
    T: np.ndarray
    count: np.ndarray

    @property
    def u_defined(self) -> np.ndarray:
        return self.count >= 1

    @property
    def T_defined(self) -> np.ndarray:
        return self.count >= 2

    def state(self, i: int) -> MomentState:
        if self.count[i] == 0:
            return MomentState(0.0)
        T = float(self.T[i]) if self.T_defined[i] else None
        return MomentState(float(self.rho[i]), self.u[i], T)


def _cells(ens: ParticleEnsemble, grid: Grid1D | None) -> tuple[np.ndarray, int, float]:
    if grid is None or ens.x is None:
        return np.zeros(ens.count, dtype=np.int64), 1, 1.0
    return grid.cell_of(ens.x), grid.n_cells, grid.dx


def _moments(v: np.ndarray, cell: np.ndarray, n: int, volume: float, weight: float) -> CellMoments:
    count = np.bincount(cell, minlength=n)
    safe = np.maximum(count, 1)
    u = np.stack([np.bincount(cell, v[:, k], minlength=n) for k in range(3)], axis=1) / safe[:, None]
    d = v - u[cell]
    T = np.bincount(cell, np.sum(d * d, axis=1), minlength=n) / (3.0 * safe)
    u[count < 1] = np.nan
    T[count < 2] = np.nan
    rho = weight * count / volume
    return CellMoments(rho, u, T, count)


def cell_moments(ens: ParticleEnsemble, grid: Grid1D | None = None) -> CellMoments:
    """Density, mean velocity and temperature per cell (one cell of unit volume when homogeneous)."""
    cell, n, volume = _cells(ens, grid)
    return _moments(ens.v, cell, n, volume, ens.weight)


def batch_moments(ens: ParticleEnsemble, grid: Grid1D | None, batches: int) -> list[CellMoments]:
    """Moments of ``batches`` disjoint sub-ensembles (membership by birth index)."""
    cell, n, volume = _cells(ens, grid)
    member = ens.ids % batches
    out = []
    for b in range(batches):
        sel = member == b
        out.append(_moments(ens.v[sel], cell[sel], n, volume, ens.weight * batches))
    return out


def batch_sigma(batch: list[CellMoments]) -> dict[str, np.ndarray]:
    """Standard error of the full-ensemble mean from batch means (per cell, per field)."""
    stacks = {
        "rho": np.stack([m.rho for m in batch]),
        "ux": np.stack([m.u[:, 0] for m in batch]),
        "uy": np.stack([m.u[:, 1] for m in batch]),
        "uz": np.stack([m.u[:, 2] for m in batch]),
        "T": np.stack([m.T for m in batch]),
    }
    out = {}
    for key, arr in stacks.items():
        ok = np.isfinite(arr)
        k = ok.sum(axis=0)
        mean = np.where(ok, arr, 0.0).sum(axis=0) / np.maximum(k, 1)
        var = np.where(ok, (arr - mean) ** 2, 0.0).sum(axis=0) / np.maximum(k - 1, 1)
        sig = np.sqrt(var / np.maximum(k, 1))
        sig[k < 2] = np.nan
        out[key] = sig
    return out


def cell_S(
    ens: ParticleEnsemble, closure: SClosure, bg: BackgroundState, grid: Grid1D | None = None
) -> np.ndarray:
    """S per cell from the particles in that cell (``nan`` for empty cells).

    For the hard-sphere kernel this is the ensemble mean relative speed, which
    is reported but not used as a rate.
    """
    cell, n, _ = _cells(ens, grid)
    count = np.bincount(cell, minlength=n)
    with np.errstate(invalid="ignore", divide="ignore"):
        if closure.kind is ClosureKind.CONSTANT:
            S = np.full(n, closure.value)
        elif closure.kind is ClosureKind.SQRT_RELATIVE_TEMPERATURE:
            d = ens.v - bg.u1
            Tr = np.bincount(cell, np.sum(d * d, axis=1), minlength=n) / (3.0 * count)
            S = closure.value * np.sqrt(Tr)
        else:
            Z = mean_relative_speed_Z(ens.v, bg) if ens.count else np.empty(0)
            S = np.bincount(cell, Z, minlength=n) / count / bg.rho1
    S = np.asarray(S, dtype=float)
    S[count == 0] = np.nan
    return S


def hard_sphere_majorant(
    ens: ParticleEnsemble, bg: BackgroundState, config: KineticConfig, grid: Grid1D | None = None
) -> np.ndarray:
    """Per-cell bound on |v - w|: |u - u1| + k (sqrt(T) + sqrt(T1)) unless fixed in the config."""
    cell, n, _ = _cells(ens, grid)
    if config.majorant is not None:
        return np.full(n, config.majorant)
    m = cell_moments(ens, grid if ens.x is not None else None)
    drift = np.linalg.norm(np.nan_to_num(m.u - bg.u1), axis=1)
    Tc = np.where(m.T_defined, np.nan_to_num(m.T), 0.0)
    return drift + config.majorant_sigmas * (np.sqrt(Tc) + math.sqrt(bg.T1))


# --- steps ------------------------------------------------------------------------------


def poisson_counts(U: np.ndarray, mean) -> np.ndarray:
    """Inverse-CDF Poisson draws, one per uniform; ``mean`` broadcasts against ``U``."""
    m = np.broadcast_to(np.asarray(mean, dtype=float), U.shape)
    k = np.zeros(U.shape, dtype=np.int64)
    p = np.exp(-m)
    idx = np.nonzero(U >= p)[0]
    # only the (few) particles past the k = 0 mass are iterated further
    u, mm, p = U[idx], m[idx], p[idx]
    cdf = p.copy()
    j = 0
    while idx.size and j < _MAX_POISSON:
        j += 1
        k[idx] += 1
        p = p * mm / j
        cdf = cdf + p
        more = u >= cdf
        idx, u, mm, p, cdf = idx[more], u[more], mm[more], p[more], cdf[more]
    return k


@dataclass
class CollisionOutcome:
    ensemble: ParticleEnsemble
    collisions: int
    candidates: int


def _chunks(n: int, workers: int) -> list[tuple[int, int]]:
    workers = max(1, min(workers, n)) if n else 1
    bounds = np.linspace(0, n, workers + 1).astype(int)
    return [(int(a), int(b)) for a, b in zip(bounds[:-1], bounds[1:])]


def collision_step(
    ens: ParticleEnsemble,
    params: ModelParams,
    bg: BackgroundState,
    closure: SClosure,
    S_field,
    dt: float,
    *,
    seed: int,
    step: int,
    grid: Grid1D | None = None,
    max_nu_dt: float = 0.5,
    workers: int = 1,
) -> CollisionOutcome:
    """Advance velocities through one collision substep of length ``dt``.

    ``S_field`` is a scalar or a per-cell array. For the hard-sphere kernel it
    holds the per-cell majorant speed, candidates occur at the majorant rate
    and are accepted with probability |v - w| / majorant.
    """
    N = ens.count
    if N == 0:
        return CollisionOutcome(ens, 0, 0)
    cell, _, _ = _cells(ens, grid)
    S_cell = np.atleast_1d(np.asarray(S_field, dtype=float))
    S_p = S_cell[cell] if S_cell.size > 1 else np.full(N, S_cell[0])
    nu = collision_rate(params, bg, S_p)
    nu_dt = float(np.max(nu)) * dt if N else 0.0
    if nu_dt > max_nu_dt:
        raise StepSizeError(f"nu*dt = {nu_dt:.4g} exceeds the guard {max_nu_dt}; reduce dsmc.dt")
    if not np.any(nu > 0):
        return CollisionOutcome(ens, 0, 0)

    thinning = closure.kind is ClosureKind.HARD_SPHERE
    a = effective_coefficient(params)
    sqrt_T1 = math.sqrt(bg.T1)

    U = rngmod.uniforms(seed, step, rngmod.DECISION, 0, N)
    k = poisson_counts(U, nu * dt)
    offsets = np.cumsum(k) - k

    def work(i0: int, i1: int):
        kk = k[i0:i1]
        v = ens.v[i0:i1].copy()
        total = int(kk.sum())
        if total == 0:
            return v, 0
        R = rngmod.uniforms(
            seed, step, rngmod.COLLISION, int(offsets[i0]) * UNIFORMS_PER_COLLISION, total * UNIFORMS_PER_COLLISION
        ).reshape(total, UNIFORMS_PER_COLLISION)
        local = offsets[i0:i1] - offsets[i0]
        accepted = 0
        for r in range(int(kk.max())):
            sel = np.nonzero(kk > r)[0]
            rows = R[local[sel] + r]
            g1, g2 = rngmod.normals_from_uniforms(rows[:, 0], rows[:, 1])
            g3, _ = rngmod.normals_from_uniforms(rows[:, 2], rows[:, 3])
            w = bg.u1 + sqrt_T1 * np.stack([g1, g2, g3], axis=1)
            n = rngmod.unit_vectors_from_uniforms(rows[:, 4], rows[:, 5])
            if thinning:
                speed = np.linalg.norm(v[sel] - w, axis=1)
                bound = S_p[i0:i1][sel]
                over = speed > bound
                if over.any():
                    j = int(np.argmax(np.where(over, speed - bound, -np.inf)))
                    raise MajorantViolationError(float(speed[j]), float(bound[j]))
                keep = rows[:, 6] * bound < speed
                sel, w, n = sel[keep], w[keep], n[keep]
            v[sel] = _post_collision(v[sel], w, n, a)
            accepted += len(sel)
        return v, accepted

    parts = _chunks(N, workers)
    if len(parts) == 1:
        results = [work(*parts[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(parts)) as pool:
            results = list(pool.map(lambda ab: work(*ab), parts))
    v_new = np.concatenate([r[0] for r in results]) if len(results) > 1 else results[0][0]
    collisions = sum(r[1] for r in results)
    out = ParticleEnsemble(v_new, ens.weight, ens.x, ens.ids)
    return CollisionOutcome(out, collisions, int(k.sum()))


def transport_step(ens: ParticleEnsemble, dt: float, grid: Grid1D, bc: KineticBC) -> ParticleEnsemble:
    """Free streaming x <- x + v_x dt; periodic wrap or vacuum outflow."""
    if ens.x is None:
        raise ParameterError("mode", "transport needs particle positions (slab1d mode)")
    x = ens.x + ens.v[:, 0] * dt
    if KineticBC(bc) is KineticBC.PERIODIC:
        x = grid.x_min + np.mod(x - grid.x_min, grid.length)
        x[x >= grid.x_max] = grid.x_min
        return ParticleEnsemble(ens.v, ens.weight, x, ens.ids)
    keep = (x >= grid.x_min) & (x < grid.x_max)
    return ParticleEnsemble(ens.v[keep], ens.weight, x[keep], ens.ids[keep])


# --- driver ------------------------------------------------------------------------------


def initial_ensemble(config: KineticConfig, initial: InitialCondition) -> ParticleEnsemble:
    """Sample particles from the initial profile.

    Positions are stratified samples of the normalised density; velocities are
    Maxwellian with the local mean velocity and temperature.
    """
    gen = rngmod.initial_generator(config.seed)
    N = int(config.n_particles)
    if config.mode is KineticMode.HOMOGENEOUS:
        state = initial.uniform_state()
        v = sample_maxwellian(gen, state.u, state.T, size=N)
        return ParticleEnsemble(v, state.rho / N)
    grid = config.grid
    fine = Grid1D(max(64 * grid.n_cells, 4096), grid.x_min, grid.x_max)
    mass = fine.cell_average(lambda x: initial.fields(x, grid)[0]) * fine.dx
    cdf = np.concatenate([[0.0], np.cumsum(mass)])
    total = cdf[-1]
    targets = (np.arange(N) + gen.random(N)) / N * total
    x = np.interp(targets, cdf, fine.edges)
    x = np.clip(x, grid.x_min, np.nextafter(grid.x_max, grid.x_min))
    _, u, T = initial.fields(x, grid)
    v = u + np.sqrt(T)[:, None] * gen.standard_normal((N, 3))
    return ParticleEnsemble(v, total / N, x)


@dataclass
class Snapshot:
    t: float
    moments: CellMoments
    S: np.ndarray
    sigma: dict[str, np.ndarray]
    batches: list[CellMoments]


@dataclass
class DsmcResult:
    snapshots: list[Snapshot]
    grid: Grid1D | None
    collisions: np.ndarray
    candidates: np.ndarray
    S_history: np.ndarray
    wall_time: float
    final: ParticleEnsemble = field(repr=False)

    @property
    def times(self) -> np.ndarray:
        return np.array([s.t for s in self.snapshots])


def run_dsmc(
    config: KineticConfig,
    params: ModelParams,
    bg: BackgroundState,
    closure: SClosure,
    initial: InitialCondition,
) -> DsmcResult:
    """Split transport/collision loop with snapshots every ``output_interval``.

    S is re-evaluated from the current particles before every collision step,
    globally in homogeneous mode and per cell in slab mode.
    """
    started = time.perf_counter()
    grid = config.grid if config.mode is KineticMode.SLAB1D else None
    ens = initial_ensemble(config, initial)
    n_steps, stride = config.n_steps, config.output_stride

    def snapshot(t: float) -> Snapshot:
        batches = batch_moments(ens, grid, config.batches)
        return Snapshot(t, cell_moments(ens, grid), cell_S(ens, closure, bg, grid), batch_sigma(batches), batches)

    snaps = [snapshot(0.0)]
    collisions = np.zeros(n_steps, dtype=np.int64)
    candidates = np.zeros(n_steps, dtype=np.int64)
    S_hist = []
    for step in range(n_steps):
        if grid is not None:
            ens = transport_step(ens, config.dt, grid, config.bc)
        if closure.kind is ClosureKind.HARD_SPHERE:
            S = hard_sphere_majorant(ens, bg, config, grid)
        else:
            S = cell_S(ens, closure, bg, grid)
        S_hist.append(S)
        out = collision_step(
            ens,
            params,
            bg,
            closure,
            np.nan_to_num(S),
            config.dt,
            seed=config.seed,
            step=step,
            grid=grid,
            max_nu_dt=config.max_nu_dt,
            workers=config.workers,
        )
        ens = out.ensemble
        collisions[step] = out.collisions
        candidates[step] = out.candidates
        if (step + 1) % stride == 0 or step + 1 == n_steps:
            snaps.append(snapshot((step + 1) * config.dt))
    return DsmcResult(
        snaps,
        grid,
        collisions,
        candidates,
        np.array(S_hist) if S_hist else np.empty((0, 1)),
        time.perf_counter() - started,
        ens,
    )
