"""Solver orchestration, run directories, comparisons and convergence sweeps."""

from __future__ import annotations

import math
import platform
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from . import io
from .config import Scenario, dump_config, parse_config
from .dsmc import KineticMode, run_dsmc
from .errors import IncompatibleRunsError, ParameterError
from .euler1d import run_euler, st_limit_reference
from .model import equilibrium_temperature_model
from .moment_ode import OdeState, integrate, temperature_rhs

META = "meta.cfg"
SNAPSHOTS = "snapshots.csv"
SIGMA = "sigma.csv"
TRAJECTORY = "trajectory.csv"
COLLISIONS = "collisions.csv"
FIELDS = ("rho", "ux", "uy", "uz", "T")


def build_info() -> list[str]:
    return [
        f"linboltz {__version__}",
        f"python {platform.python_version()} numpy {np.__version__}",
    ]


def write_meta(out_dir: Path, scenario: Scenario, kind: str, threads: int) -> None:
    scn = scenario.replace(run__kind=kind, run__threads=threads)
    header = ["run directory metadata; re-run with --config on this file"] + build_info()
    (out_dir / META).write_text(dump_config(scn, header))


# --- running -------------------------------------------------------------------------------------


def ode_initial(scenario: Scenario) -> OdeState:
    ms = scenario.initial.uniform_state()
    return OdeState(ms.u, ms.T)


def run_odes(scenario: Scenario):
    o = scenario.ode
    return integrate(ode_initial(scenario), scenario.params, scenario.bg, scenario.closure, o.dt, o.t_end, o.output_interval)


def run_scenario_dsmc(scenario: Scenario, threads: int = 1):
    cfg = scenario.dsmc
    if cfg.mode is KineticMode.HOMOGENEOUS and not scenario.initial.is_uniform:
        raise ParameterError("initial.kind", "homogeneous dsmc needs a uniform initial condition")
    if threads != cfg.workers:
        cfg = scenario.replace(run__threads=threads).dsmc
    return run_dsmc(cfg, scenario.params, scenario.bg, scenario.closure, scenario.initial)


def run_scenario_euler(scenario: Scenario):
    return run_euler(scenario.grid, scenario.euler, scenario.params, scenario.bg, scenario.closure, scenario.initial)


def cmd_run(kind: str, scenario: Scenario, out_dir, threads: int = 1) -> str:
    """Run one solver, write its artifacts into ``out_dir`` and return the summary line."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if kind == "odes":
        traj = run_odes(scenario)
        io.write_rows(out_dir / TRAJECTORY, io.TRAJECTORY_HEADER, io.trajectory_rows(traj))
        rates = [abs(temperature_rhs(traj.state(i), scenario.params, scenario.bg, traj.S[i])) for i in range(len(traj.t))]
        summary = (
            f"odes: t_end={traj.t[-1]:.6g} T_final={traj.T[-1]:.12g} "
            f"u_final=({traj.u[-1, 0]:.6g},{traj.u[-1, 1]:.6g},{traj.u[-1, 2]:.6g}) max|dT/dt|={max(rates):.3e}"
        )
    elif kind == "dsmc":
        res = run_scenario_dsmc(scenario, threads)
        io.write_rows(out_dir / SNAPSHOTS, io.DSMC_HEADER, io.dsmc_rows(res))
        io.write_rows(out_dir / SIGMA, io.SIGMA_HEADER, io.sigma_rows(res))
        io.write_rows(
            out_dir / COLLISIONS, io.COLLISION_HEADER,
            ((k, res.collisions[k], res.candidates[k]) for k in range(len(res.collisions))),
        )
        N = scenario.dsmc.n_particles
        span = max(scenario.dsmc.t_end, 1e-300)
        last = res.snapshots[-1].moments
        summary = (
            f"dsmc: N={N} steps={len(res.collisions)} collisions/particle/time={res.collisions.sum() / (N * span):.6g} "
            f"particles_final={res.final.count} T_final(cell0)={last.T[0]:.6g} wall={res.wall_time:.2f}s"
        )
    elif kind == "euler":
        res = run_scenario_euler(scenario)
        io.write_rows(out_dir / SNAPSHOTS, io.FIELD_HEADER, io.euler_rows(res))
        summary = f"euler: cells={res.grid.n_cells} steps={res.n_steps} t_end={res.times[-1]:.6g} mass_drift={res.mass_drift:.3e}"
    else:
        raise ParameterError("kind", f"unknown solver {kind!r}")
    write_meta(out_dir, scenario, kind, threads)
    return summary


# --- loading and comparing -------------------------------------------------------------------------


@dataclass
class RunData:
    kind: str
    scenario: Scenario
    times: np.ndarray
    fields: dict[str, np.ndarray]  # field -> (n_times, n_cells)
    sigma: dict[str, np.ndarray] | None
    spatial: bool

    @property
    def n_cells(self) -> int:
        return next(iter(self.fields.values())).shape[1]


def _schedule(scn: Scenario, kind: str) -> dict[str, str]:
    v = scn.settings
    sec = {"dsmc": "dsmc", "euler": "euler", "odes": "ode"}[kind]
    out = {"output_interval": repr(v[f"{sec}.output_interval"]), "t_end": repr(v[f"{sec}.t_end"])}
    return out


def load_run(run_dir) -> RunData:
    run_dir = Path(run_dir)
    scn = parse_config(run_dir / META)
    kind = scn.settings["run.kind"]
    if kind == "odes":
        tab = io.read_table(run_dir / TRAJECTORY)
        times = tab["t"]
        fields = {k: tab[k][:, None] for k in ("ux", "uy", "uz", "T")}
        return RunData(kind, scn, times, fields, None, False)
    tab = io.read_table(run_dir / SNAPSHOTS)
    times = np.unique(tab["t"])
    n_cells = int(tab["cell"].max()) + 1
    fields = {k: tab[k].reshape(len(times), n_cells) for k in FIELDS}
    sigma = None
    if kind == "dsmc":
        st = io.read_table(run_dir / SIGMA)
        sigma = {k: st[k].reshape(len(times), n_cells) for k in FIELDS}
    spatial = kind == "euler" or scn.dsmc.mode is KineticMode.SLAB1D
    return RunData(kind, scn, times, fields, sigma, spatial)


@dataclass
class ComparisonReport:
    rows: list[dict] = field(default_factory=list)  # t, field, L1, L2, Linf, max_z, n_flagged
    summary: dict[str, dict[str, float]] = field(default_factory=dict)
    relaxation_rates: dict[str, float] = field(default_factory=dict)
    fixed_point_residuals: dict[str, dict[str, float]] = field(default_factory=dict)
    stochastic: bool = False

    def text(self) -> str:
        lines = []
        for f, s in self.summary.items():
            z = f" max|d|/sigma={s['max_z']:.3g} flagged={int(s['n_flagged'])}" if self.stochastic else ""
            lines.append(f"{f:>3}: L1={s['L1']:.6e} L2={s['L2']:.6e} Linf={s['Linf']:.6e}{z}")
        for run, rate in self.relaxation_rates.items():
            lines.append(f"relaxation rate |u-u1| ({run}): {rate:.6g}")
        for run, res in self.fixed_point_residuals.items():
            lines.append(f"fixed-point residual ({run}): |u-u1|={res['u']:.3e} |T-T_eq|={res['T']:.3e}")
        return "\n".join(lines) + "\n"


def _check_compatible(a: RunData, b: RunData) -> None:
    differing = {}
    if a.spatial and b.spatial:
        for key in ("grid.n_cells", "grid.x_min", "grid.x_max"):
            va, vb = a.scenario.settings[key], b.scenario.settings[key]
            if va != vb:
                differing[key] = (repr(va), repr(vb))
    sa, sb = _schedule(a.scenario, a.kind), _schedule(b.scenario, b.kind)
    for key in sa:
        if sa[key] != sb[key]:
            differing[f"{key} ({a.kind} vs {b.kind})"] = (sa[key], sb[key])
    if not differing and (len(a.times) != len(b.times) or not np.allclose(a.times, b.times, rtol=1e-12, atol=1e-12)):
        differing["snapshot times"] = (repr(list(a.times)), repr(list(b.times)))
    if differing:
        raise IncompatibleRunsError(differing)


def _broadcast(arr: np.ndarray, n: int) -> np.ndarray:
    return np.broadcast_to(arr, (arr.shape[0], n)) if arr.shape[1] == 1 else arr


def _relaxation_rate(run: RunData) -> float:
    """Log-linear fit of the cell-averaged |u - u1| while it stays above 1e-3 of its start."""
    u1 = run.scenario.bg.u1
    d = np.stack([np.nanmean(run.fields[k], axis=1) - u1[i] for i, k in enumerate(("ux", "uy", "uz"))], axis=1)
    g = np.linalg.norm(d, axis=1)
    if not g[0] > 0:
        return math.nan
    keep = g > 1e-3 * g[0]
    idx = np.nonzero(keep)[0]
    idx = idx[idx <= np.argmin(keep) - 1] if not keep.all() else idx
    if len(idx) < 3:
        return math.nan
    return float(-np.polyfit(run.times[idx], np.log(g[idx]), 1)[0])


def cmd_compare(run_a, run_b, out=None) -> ComparisonReport:
    a, b = load_run(run_a), load_run(run_b)
    _check_compatible(a, b)
    n = max(a.n_cells, b.n_cells)
    report = ComparisonReport(stochastic=a.sigma is not None or b.sigma is not None)
    common = [f for f in FIELDS if f in a.fields and f in b.fields]
    for f in common:
        A, B = _broadcast(a.fields[f], n), _broadcast(b.fields[f], n)
        sig2 = np.zeros_like(np.asarray(A, dtype=float))
        for run in (a, b):
            if run.sigma is not None:
                sig2 = sig2 + _broadcast(run.sigma[f], n) ** 2
        for k, t in enumerate(a.times):
            d = np.abs(A[k] - B[k])
            ok = np.isfinite(d)
            dv = d[ok]
            row = {"t": float(t), "field": f, "L1": 0.0, "L2": 0.0, "Linf": 0.0, "max_z": 0.0, "n_flagged": 0}
            if dv.size:
                row.update(L1=float(np.mean(dv)), L2=float(np.sqrt(np.mean(dv * dv))), Linf=float(np.max(dv)))
            if report.stochastic:
                s = np.sqrt(sig2[k][ok])
                with np.errstate(divide="ignore", invalid="ignore"):
                    z = np.where(s > 0, dv / s, np.where(dv > 0, np.inf, 0.0))
                z = z[np.isfinite(s)]
                row["max_z"] = float(np.max(z)) if z.size else 0.0
                row["n_flagged"] = int(np.sum(z > 3.0))
            report.rows.append(row)
        rows = [r for r in report.rows if r["field"] == f]
        report.summary[f] = {
            "L1": max(r["L1"] for r in rows),
            "L2": max(r["L2"] for r in rows),
            "Linf": max(r["Linf"] for r in rows),
            "max_z": max(r["max_z"] for r in rows),
            "n_flagged": sum(r["n_flagged"] for r in rows),
        }
    for label, run in (("a", a), ("b", b)):
        report.relaxation_rates[label] = _relaxation_rate(run)
        try:
            T_eq = equilibrium_temperature_model(run.scenario.params, run.scenario.bg.T1)
        except Exception:
            T_eq = math.nan
        u = np.stack([run.fields[k][-1] for k in ("ux", "uy", "uz")], axis=1)
        report.fixed_point_residuals[label] = {
            "u": float(np.nanmax(np.linalg.norm(u - run.scenario.bg.u1, axis=1))),
            "T": float(np.nanmax(np.abs(run.fields["T"][-1] - T_eq))),
        }
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        io.write_rows(
            out, ["t", "field_index", "L1", "L2", "Linf", "max_z", "n_flagged"],
            ((r["t"], FIELDS.index(r["field"]), r["L1"], r["L2"], r["Linf"], r["max_z"], r["n_flagged"]) for r in report.rows),
        )
        out.with_suffix(".txt").write_text(report.text())
    return report


# --- sweeps ----------------------------------------------------------------------------------------

SWEEP_AXES = {
    "dt": {"odes": "ode.dt", "dsmc": "dsmc.dt"},
    "n_particles": {"dsmc": "dsmc.n_particles"},
    "n_cells": {"euler": "grid.n_cells"},
    "lambda": {"euler": "model.lambda"},
}


@dataclass
class SweepResult:
    axis: str
    kind: str
    values: list[float]
    errors: list[float]
    order: float
    reference: str
    monotone: bool

    def text(self) -> str:
        lines = [f"sweep axis={self.axis} solver={self.kind} reference={self.reference}"]
        lines += [f"  {v:>14.6g}  error={e:.6e}" for v, e in zip(self.values, self.errors)]
        if not math.isnan(self.order):
            lines.append(f"fitted order: {self.order:.3f}")
        lines.append(f"monotone decreasing: {self.monotone}")
        return "\n".join(lines) + "\n"


def _sweep_job(args):
    kind, scenario = args
    if kind == "odes":
        return run_odes(scenario)
    if kind == "dsmc":
        return run_scenario_dsmc(scenario)
    return run_scenario_euler(scenario)


def _fit_order(values, errors, sign: float) -> float:
    v, e = np.asarray(values, dtype=float), np.asarray(errors, dtype=float)
    ok = (e > 0) & np.isfinite(e)
    if ok.sum() < 2:
        return math.nan
    return float(sign * np.polyfit(np.log(v[ok]), np.log(e[ok]), 1)[0])


def _ode_fields(traj) -> np.ndarray:
    return np.column_stack([traj.u, traj.T])


def _dsmc_fields(res) -> np.ndarray:
    return np.array([[*s.moments.u[0], s.moments.T[0]] for s in res.snapshots])


def cmd_sweep(scenario: Scenario, axis: str, values, kind: str | None = None, out=None, threads: int = 1) -> SweepResult:
    """Repeat a run along one axis and fit the convergence order of its error.

    dt:          error vs the smallest-dt run (max norm over outputs), order = slope in dt.
    n_particles: RMS error of homogeneous (u, T) vs the RK4 moment trajectory, order = -slope in N.
    n_cells:     L1 density error at t_end vs the exact advected profile when sources are off and the
                 initial velocity is uniform, else vs the finest run averaged onto each grid.
    lambda:      L1 density distance at t_end to the background-advected initial profile.
    """
    values = sorted(float(v) for v in values)
    if len(values) < 3:
        raise ParameterError("values", "a sweep needs at least 3 values")
    kinds = SWEEP_AXES.get(axis)
    if kinds is None:
        raise ParameterError("axis", f"unknown sweep axis {axis!r}")
    kind = kind or next(iter(kinds))
    if kind not in kinds:
        raise ParameterError("axis", f"axis {axis!r} does not apply to {kind}")
    key = kinds[kind]
    cast = int if key in ("grid.n_cells", "dsmc.n_particles") else float
    scenarios = [scenario.replace(**{key.replace(".", "__"): cast(v)}) for v in values]
    jobs = [(kind, s) for s in scenarios]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(_sweep_job, jobs))
    else:
        results = [_sweep_job(j) for j in jobs]

    monotone_target = None
    if axis == "dt":
        fields = [_ode_fields(r) if kind == "odes" else _dsmc_fields(r) for r in results]
        ref = fields[0]
        errors = [float(np.max(np.abs(f - ref))) for f in fields[1:]]
        errors = [0.0] + errors
        order = _fit_order(values[1:], errors[1:], +1.0)
        reference = f"dt={values[0]:g}"
    elif axis == "n_particles":
        traj = run_odes(scenario.replace(ode__dt=scenario.dsmc.dt, ode__t_end=scenario.dsmc.t_end,
                                         ode__output_interval=scenario.dsmc.output_interval))
        ref = _ode_fields(traj)
        errors = [float(np.sqrt(np.mean((_dsmc_fields(r)[1:] - ref[1:]) ** 2))) for r in results]
        order = _fit_order(values, errors, -1.0)
        reference = "moment ODE"
    elif axis == "n_cells":
        exact = (not scenario.euler.sources or scenario.params.collisionless) and _uniform_velocity(scenario)
        errors = []
        if exact:
            ux = scenario.initial.u[0]
            for r in results:
                g = r.grid
                rho_ref = g.cell_average(
                    lambda x: st_limit_reference(lambda y: scenario.initial.fields(y, g)[0], x, (ux, 0, 0), r.times[-1], g)
                )
                errors.append(float(np.sum(np.abs(r.rho[-1] - rho_ref)) * g.dx))
            order = _fit_order(values, errors, -1.0)
            reference = "exact advection"
        else:
            fine = results[-1]
            for r in results:
                ratio = fine.grid.n_cells // r.grid.n_cells
                if ratio * r.grid.n_cells != fine.grid.n_cells:
                    raise ParameterError("values", "n_cells values must divide the finest grid")
                coarse = fine.rho[-1].reshape(r.grid.n_cells, ratio).mean(axis=1)
                errors.append(float(np.sum(np.abs(r.rho[-1] - coarse)) * r.grid.dx))
            order = _fit_order(values[:-1], errors[:-1], -1.0)
            reference = f"n_cells={int(values[-1])}"
    else:
        errors = []
        for r in results:
            g = r.grid
            rho_ref = g.cell_average(
                lambda x: st_limit_reference(lambda y: scenario.initial.fields(y, g)[0], x, scenario.bg.u1, r.times[-1], g)
            )
            errors.append(float(np.sum(np.abs(r.rho[-1] - rho_ref)) * g.dx))
        order = math.nan
        reference = "background advection (strong-coupling limit)"
        monotone_target = errors  # ascending lambda -> ascending distance
    if monotone_target is not None:
        monotone = all(x < y for x, y in zip(monotone_target[:-1], monotone_target[1:]))
    else:
        errs = errors[1:] if axis == "dt" else errors
        vals = values[1:] if axis == "dt" else values
        # error shrinks as dt shrinks, or as n_particles / n_cells grow
        seq = errs if axis == "dt" else errs[::-1]
        monotone = all(x <= y for x, y in zip(seq[:-1], seq[1:])) if len(vals) > 1 else True
    result = SweepResult(axis, kind, values, errors, order, reference, monotone)
    if out is not None:
        out = Path(out)
        out.parent.mkdir(parents=True, exist_ok=True)
        io.write_rows(out, ["value", "error"], zip(values, errors))
        out.with_suffix(".txt").write_text(result.text())
    return result


def _uniform_velocity(scenario: Scenario) -> bool:
    """True when the initial profile is a pure entropy wave (uniform u and p)."""
    ic = scenario.initial
    if ic.is_uniform:
        return True
    return ic.kind.value in ("sine", "gaussian_bump") and ic.isobaric


def print_params(scenario: Scenario) -> str:
    from .model import (
        effective_coefficient,
        equilibrium_temperature_sharp,
        evaluate_S,
    )
    from .moment_ode import relaxation_rates

    p, bg = scenario.params, scenario.bg
    a = effective_coefficient(p)
    lines = [
        f"alpha = {p.alpha!r}",
        f"beta = {p.beta!r}",
        f"alpha_convention = {p.alpha_convention.value}",
        f"a = {a!r}",
        f"rate_constant = {p.rate_constant!r}",
        f"T_eq_sharp = {equilibrium_temperature_sharp(p, bg.T1)!r}",
    ]
    try:
        lines.append(f"T_eq_model = {equilibrium_temperature_model(p, bg.T1)!r}")
    except Exception as exc:  # a >= 1
        lines.append(f"T_eq_model = undefined ({exc})")
    if scenario.closure.kind.value != "hard_sphere" and scenario.initial.is_uniform:
        S = evaluate_S(scenario.closure, scenario.initial.uniform_state(), bg)
        k1, kT = relaxation_rates(p, bg, S)
        lines += [f"S_initial = {S!r}", f"kappa_momentum = {k1!r}", f"kappa_temperature = {kT!r}"]
    return "\n".join(lines) + "\n"

