"""Plain-text scenario files.

One ``key = value`` pair per line with dotted section keys (``model.e = 0.5``).
``#`` starts a comment. Vectors are comma separated (``background.u1 = 1,0,0``).
Unknown keys are errors; everything not given takes the default listed by
``linboltz print-schema``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

from .dsmc import KineticConfig, KineticMode
from .errors import ConfigError, ParameterError
from .euler1d import EulerConfig
from .grid import Grid1D
from .initial import InitialCondition
from .model import BackgroundState, ModelParams, SClosure

REQUIRED = object()

_CLOSURES = ("constant", "sqrt_relative_temperature", "expected_relative_speed", "hard_sphere")
_INITIAL = ("uniform", "gaussian_bump", "sine", "sod", "tabulated")

# key: (type, default, help)
SCHEMA: dict[str, tuple[str, object, str]] = {
    "name": ("str", "scenario", "free-form label"),
    "model.m1": ("float", REQUIRED, "inelastic particle mass"),
    "model.m": ("float", REQUIRED, "background particle mass"),
    "model.e": ("float", REQUIRED, "restitution coefficient in (0,1]"),
    "model.lambda": ("float", REQUIRED, "mean free path (> 0, 'inf' switches collisions off)"),
    "model.alpha_convention": ("choice:direct,complementary", "direct", "mass ratio entering the collision rule"),
    "model.rate_constant": ("float", 4.0, "collision rate prefactor: nu = rate_constant*S*rho1/lambda"),
    "background.rho1": ("float", 1.0, "background density"),
    "background.u1": ("vec3", (0.0, 0.0, 0.0), "background mean velocity"),
    "background.T1": ("float", REQUIRED, "background temperature"),
    "closure.kind": ("choice:" + ",".join(_CLOSURES), "constant", "S(t,x) closure"),
    "closure.s0": ("float", 1.0, "S for the constant closure"),
    "closure.mu": ("float", 1.0, "prefactor for S = mu*sqrt(T_r)"),
    "initial.kind": ("choice:" + ",".join(_INITIAL), "uniform", "initial profile"),
    "initial.rho": ("float", 1.0, "density (background level for bump/sine, left state for sod)"),
    "initial.u": ("vec3", (0.0, 0.0, 0.0), "mean velocity (left state for sod)"),
    "initial.T": ("float", 1.0, "temperature (left state for sod)"),
    "initial.amplitude": ("float", 0.0, "bump/sine density amplitude"),
    "initial.center": ("float", 0.5, "bump centre / sod interface"),
    "initial.width": ("float", 0.1, "bump standard deviation"),
    "initial.modes": ("int", 1, "sine periods per domain"),
    "initial.isobaric": ("bool", False, "rescale T so rho*T is uniform (bump/sine)"),
    "initial.right_rho": ("float", 0.125, "sod right density"),
    "initial.right_u": ("vec3", (0.0, 0.0, 0.0), "sod right velocity"),
    "initial.right_T": ("float", 0.8, "sod right temperature"),
    "initial.table": ("str", "", "CSV with columns x,rho,ux,uy,uz,T (tabulated)"),
    "grid.n_cells": ("int", 64, "number of cells (euler, dsmc slab1d)"),
    "grid.x_min": ("float", 0.0, "left domain edge"),
    "grid.x_max": ("float", 1.0, "right domain edge"),
    "dsmc.mode": ("choice:homogeneous,slab1d", "homogeneous", "kinetic geometry"),
    "dsmc.dt": ("float", 0.0125, "time step"),
    "dsmc.t_end": ("float", 10.0, "final time"),
    "dsmc.n_particles": ("int", 100000, "simulation particles"),
    "dsmc.seed": ("int", 42, "64-bit seed"),
    "dsmc.bc": ("choice:periodic,outflow", "periodic", "slab boundary (outflow = vacuum, no injection)"),
    "dsmc.majorant": ("optfloat", None, "fixed hard-sphere majorant speed ('auto' = per-cell estimate)"),
    "dsmc.majorant_sigmas": ("float", 6.0, "thermal widths in the automatic majorant"),
    "dsmc.output_interval": ("float", 0.5, "snapshot spacing (multiple of dt)"),
    "dsmc.max_nu_dt": ("float", 0.5, "step-size guard on nu*dt"),
    "dsmc.batches": ("int", 16, "sub-ensembles for batch-means sigma"),
    "euler.cfl": ("float", 0.5, "Courant number in (0,0.9]"),
    "euler.flux": ("choice:hll,rusanov", "hll", "numerical flux"),
    "euler.bc": ("choice:periodic,transmissive", "periodic", "boundary condition"),
    "euler.splitting": ("choice:strang,godunov", "strang", "source splitting"),
    "euler.t_end": ("float", 1.0, "final time"),
    "euler.output_interval": ("float", 0.1, "snapshot spacing"),
    "euler.max_dt": ("optfloat", None, "upper bound on the step ('auto' = CFL only)"),
    "euler.sources": ("bool", True, "apply relaxation sources"),
    "ode.dt": ("float", 0.001, "RK4 step"),
    "ode.t_end": ("float", 10.0, "final time"),
    "ode.output_interval": ("float", 0.1, "output spacing (multiple of dt)"),
    "run.kind": ("choice:none,dsmc,euler,odes", "none", "solver that produced a run directory (meta files)"),
    "run.threads": ("int", 1, "worker threads used for the run (meta files)"),
}


def _parse_value(key: str, kind: str, text: str, line: int | None):
    def bad(msg):
        return ConfigError(msg, line=line, key=key)

    text = text.strip()
    try:
        if kind == "str":
            return text
        if kind == "float":
            return float(text)
        if kind == "optfloat":
            return None if text.lower() in ("auto", "none", "") else float(text)
        if kind == "int":
            return int(text)
        if kind == "bool":
            low = text.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise bad(f"expected a boolean, got {text!r}")
        if kind == "vec3":
            parts = [p for p in text.replace("(", "").replace(")", "").split(",")]
            if len(parts) != 3:
                raise bad(f"expected three comma-separated numbers, got {text!r}")
            return tuple(float(p) for p in parts)
        if kind.startswith("choice:"):
            options = kind.split(":", 1)[1].split(",")
            if text not in options:
                raise bad(f"expected one of {', '.join(options)}, got {text!r}")
            return text
    except ValueError as exc:
        raise bad(f"cannot parse {text!r} as {kind}") from exc
    raise AssertionError(kind)


def format_value(kind: str, value) -> str:
    if value is None:
        return "auto"
    if kind in ("float", "optfloat"):
        return repr(float(value))
    if kind == "vec3":
        return ",".join(repr(float(c)) for c in value)
    if kind == "bool":
        return "true" if value else "false"
    return str(value)


def parse_text(text: str) -> dict[str, object]:
    """Key-value pairs with schema types; defaults are not applied here."""
    values: dict[str, object] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {raw.strip()!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in SCHEMA:
            raise ConfigError("unknown key", line=lineno, key=key)
        if key in values:
            raise ConfigError("duplicate key", line=lineno, key=key)
        values[key] = _parse_value(key, SCHEMA[key][0], value, lineno)
    return values


def resolve(values: dict[str, object]) -> dict[str, object]:
    out = {}
    for key, (_, default, _) in SCHEMA.items():
        if key in values:
            out[key] = values[key]
        elif default is REQUIRED:
            raise ConfigError("required key missing", key=key)
        else:
            out[key] = default
    return out


@dataclass(frozen=True)
class OdeConfig:
    dt: float = 1e-3
    t_end: float = 10.0
    output_interval: float = 0.1


@dataclass(frozen=True)
class Scenario:
    name: str
    params: ModelParams
    bg: BackgroundState
    closure: SClosure
    initial: InitialCondition
    grid: Grid1D
    dsmc: KineticConfig
    euler: EulerConfig
    ode: OdeConfig
    values: tuple  # resolved (key, value) pairs in schema order

    @property
    def settings(self) -> dict[str, object]:
        return dict(self.values)

    def replace(self, **changes) -> Scenario:
        """New scenario with some dotted keys changed (re-validated)."""
        values = self.settings
        for key, value in changes.items():
            dotted = key.replace("__", ".")
            if dotted not in SCHEMA:
                raise ConfigError("unknown key", key=dotted)
            values[dotted] = value
        return build_scenario(values)


_FIELD_PREFIX = {
    "m1": "model.m1", "m": "model.m", "e": "model.e", "lambda": "model.lambda",
    "rate_constant": "model.rate_constant", "rho1": "background.rho1", "T1": "background.T1",
    "s0": "closure.s0", "mu": "closure.mu", "n_cells": "grid.n_cells", "x_max": "grid.x_max",
    "x_min": "grid.x_min", "threads": "run.threads",
}


def _guard(fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except ParameterError as exc:
        key = exc.field if exc.field in SCHEMA else _FIELD_PREFIX.get(exc.field, exc.field)
        raise ConfigError(str(exc).split(": ", 1)[-1], key=key) from exc


def build_scenario(values: dict[str, object]) -> Scenario:
    v = resolve(values)
    params = _guard(
        ModelParams, v["model.m1"], v["model.m"], v["model.e"], v["model.lambda"],
        v["model.alpha_convention"], v["model.rate_constant"],
    )
    bg = _guard(BackgroundState, v["background.rho1"], v["background.u1"], v["background.T1"])
    kind = v["closure.kind"]
    if kind == "constant":
        closure = _guard(SClosure.constant, v["closure.s0"])
    elif kind == "sqrt_relative_temperature":
        closure = _guard(SClosure.sqrt_relative_temperature, v["closure.mu"])
    elif kind == "expected_relative_speed":
        closure = SClosure.expected_relative_speed()
    else:
        closure = SClosure.hard_sphere()
    initial = _guard(
        InitialCondition,
        kind=v["initial.kind"], rho=v["initial.rho"], u=v["initial.u"], T=v["initial.T"],
        amplitude=v["initial.amplitude"], center=v["initial.center"], width=v["initial.width"],
        modes=v["initial.modes"], isobaric=v["initial.isobaric"], right_rho=v["initial.right_rho"],
        right_u=v["initial.right_u"], right_T=v["initial.right_T"], table=v["initial.table"] or None,
    )
    grid = _guard(Grid1D, v["grid.n_cells"], v["grid.x_min"], v["grid.x_max"])
    mode = KineticMode(v["dsmc.mode"])
    dsmc = _guard(
        KineticConfig,
        dt=v["dsmc.dt"], t_end=v["dsmc.t_end"], n_particles=v["dsmc.n_particles"], seed=v["dsmc.seed"],
        mode=mode, grid=grid if mode is KineticMode.SLAB1D else None, bc=v["dsmc.bc"],
        majorant=v["dsmc.majorant"], majorant_sigmas=v["dsmc.majorant_sigmas"],
        output_interval=v["dsmc.output_interval"], max_nu_dt=v["dsmc.max_nu_dt"],
        batches=v["dsmc.batches"], workers=v["run.threads"],
    )
    euler = _guard(
        EulerConfig,
        cfl=v["euler.cfl"], flux=v["euler.flux"], bc=v["euler.bc"], splitting=v["euler.splitting"],
        t_end=v["euler.t_end"], output_interval=v["euler.output_interval"], max_dt=v["euler.max_dt"],
        sources=v["euler.sources"],
    )
    for key in ("ode.dt", "ode.output_interval"):
        if not v[key] > 0:
            raise ConfigError("must be > 0", key=key)
    if not v["ode.t_end"] >= 0:
        raise ConfigError("must be >= 0", key="ode.t_end")
    ode = OdeConfig(v["ode.dt"], v["ode.t_end"], v["ode.output_interval"])
    for key in ("ode.t_end", "ode.output_interval"):
        n = v[key] / v["ode.dt"]
        if abs(n - round(n)) > 1e-9 * max(n, 1):
            raise ConfigError("must be a whole number of ode.dt steps", key=key)
    return Scenario(v["name"], params, bg, closure, initial, grid, dsmc, euler, ode, tuple(v.items()))


def parse_config(path) -> Scenario:
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    values = parse_text(text)
    table = values.get("initial.table")
    if table and not Path(table).is_absolute():
        # tables are looked up next to the file that names them
        values["initial.table"] = str((path.parent / table).resolve())
    return build_scenario(values)


def parse_config_text(text: str) -> Scenario:
    return build_scenario(parse_text(text))


def dump_config(scenario: Scenario, header: list[str] | None = None) -> str:
    """Fully resolved configuration text that parses back to an equal scenario."""
    lines = [f"# {h}" for h in header or []]
    section = None
    for key, value in scenario.values:
        head = key.split(".", 1)[0] if "." in key else None
        if head != section:
            if lines:
                lines.append("")
            section = head
        lines.append(f"{key} = {format_value(SCHEMA[key][0], value)}")
    return "\n".join(lines) + "\n"


def schema_text() -> str:
    rows = []
    for key, (kind, default, doc) in SCHEMA.items():
        d = "(required)" if default is REQUIRED else format_value(kind, default)
        rows.append(f"{key:<24} {kind:<44} {d:<14} {doc}")
    return "\n".join(rows) + "\n"
