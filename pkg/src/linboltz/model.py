"""Model parameters, Maxwellians, the collision rule and the S(t, x) closures.

Everything here is a pure function of immutable value objects; the kinetic
(:mod:`linboltz.dsmc`) and hydrodynamic (:mod:`linboltz.moment_ode`,
:mod:`linboltz.euler1d`) solvers share these definitions.

Units: the particle mass is normalised to one, so temperatures carry units
of velocity squared.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erf

from .errors import ClosureMisuseError, DomainError, ParameterError, UndefinedMomentError

UNIT_TOLERANCE = 1e-12
DEFAULT_RATE_CONSTANT = 4.0
DEFAULT_QUADRATURE_ORDER = 20


class AlphaConvention(enum.Enum):
    """Which mass ratio enters the collision rule.

    ``DIRECT`` uses alpha = m1/(m1+m) literally; ``COMPLEMENTARY`` uses 1 - alpha,
    the physical momentum-transfer fraction for a heavy particle.
    """

    DIRECT = "direct"
    COMPLEMENTARY = "complementary"


@dataclass(frozen=True)
class ModelParams:
    m1: float
    m: float
    e: float
    lam: float
    alpha_convention: AlphaConvention = AlphaConvention.DIRECT
    rate_constant: float = DEFAULT_RATE_CONSTANT
    alpha: float = field(init=False)
    beta: float = field(init=False)

    def __post_init__(self):
        if not self.m1 > 0:
            raise ParameterError("m1", f"particle mass must be > 0, got {self.m1!r}")
        if not self.m > 0:
            raise ParameterError("m", f"background mass must be > 0, got {self.m!r}")
        if not 0 < self.e <= 1:
            raise ParameterError("e", f"e must lie in (0,1], got {self.e!r}")
        if not self.lam > 0:
            raise ParameterError("lambda", f"mean free path must be > 0, got {self.lam!r}")
        if not (self.rate_constant > 0 and math.isfinite(self.rate_constant)):
            raise ParameterError("rate_constant", f"must be finite and > 0, got {self.rate_constant!r}")
        object.__setattr__(self, "alpha_convention", AlphaConvention(self.alpha_convention))
        object.__setattr__(self, "alpha", self.m1 / (self.m1 + self.m))
        object.__setattr__(self, "beta", (1.0 - self.e) / 2.0)

    @property
    def a(self) -> float:
        """Effective collision coefficient, see :func:`effective_coefficient`."""
        return effective_coefficient(self)

    @property
    def collisionless(self) -> bool:
        return math.isinf(self.lam)


def derive_params(
    m1: float,
    m: float,
    e: float,
    lam: float,
    alpha_convention: AlphaConvention | str = AlphaConvention.DIRECT,
    rate_constant: float = DEFAULT_RATE_CONSTANT,
) -> ModelParams:
    """Build validated :class:`ModelParams` from masses, restitution and mean free path."""
    return ModelParams(m1, m, e, lam, AlphaConvention(alpha_convention), rate_constant)


def effective_coefficient(params: ModelParams) -> float:
    """Scalar ``a`` in ``v* = v - 2a (q.n) n``.

    ``alpha * (1 - beta)`` for the direct convention, ``(1 - alpha) * (1 - beta)``
    for the complementary one.
    """
    if params.alpha_convention is AlphaConvention.DIRECT:
        return params.alpha * (1.0 - params.beta)
    return (1.0 - params.alpha) * (1.0 - params.beta)


@dataclass(frozen=True)
class BackgroundState:
    rho1: float = 1.0
    u1: np.ndarray = field(default_factory=lambda: np.zeros(3))
    T1: float = 1.0

    def __post_init__(self):
        u1 = np.array(self.u1, dtype=float).reshape(3)
        u1.flags.writeable = False
        object.__setattr__(self, "u1", u1)
        if not self.rho1 > 0:
            raise ParameterError("rho1", f"background density must be > 0, got {self.rho1!r}")
        if not self.T1 > 0:
            raise ParameterError("T1", f"background temperature must be > 0, got {self.T1!r}")

    def __eq__(self, other):
        if not isinstance(other, BackgroundState):
            return NotImplemented
        return self.rho1 == other.rho1 and self.T1 == other.T1 and np.array_equal(self.u1, other.u1)

    __hash__ = None


@dataclass(frozen=True)
class MomentState:
    """Hydrodynamic fields of the inelastic species at one point.

    ``u`` and ``T`` are ``None`` when they are undefined (zero density, or too
    few particles to estimate a temperature).
    """

    rho: float
    u: np.ndarray | None = None
    T: float | None = None

    def __post_init__(self):
        if not self.rho >= 0:
            raise DomainError(f"density must be >= 0, got {self.rho!r}")
        if self.rho == 0:
            object.__setattr__(self, "u", None)
            object.__setattr__(self, "T", None)
            return
        if self.u is not None:
            u = np.array(self.u, dtype=float).reshape(3)
            u.flags.writeable = False
            object.__setattr__(self, "u", u)
        if self.T is not None and not self.T >= 0:
            raise DomainError(f"temperature must be >= 0, got {self.T!r}")

    @property
    def defined(self) -> bool:
        return self.rho > 0 and self.u is not None and self.T is not None

    def require(self) -> tuple[float, np.ndarray, float]:
        if not self.defined:
            raise UndefinedMomentError(f"moments undefined for state with rho={self.rho!r}")
        return self.rho, self.u, self.T


class ClosureKind(enum.Enum):
    CONSTANT = "constant"
    SQRT_RELATIVE_TEMPERATURE = "sqrt_relative_temperature"
    EXPECTED_RELATIVE_SPEED = "expected_relative_speed"
    HARD_SPHERE = "hard_sphere"


@dataclass(frozen=True)
class SClosure:
    """Choice of the relative-speed surrogate S(t, x).

    ``value`` is s0 for ``CONSTANT`` and mu for ``SQRT_RELATIVE_TEMPERATURE``;
    unused otherwise. ``HARD_SPHERE`` tells the kinetic solver to use the
    exact kernel |v - w| through thinning.
    """

    kind: ClosureKind
    value: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ClosureKind(self.kind))
        if self.kind in (ClosureKind.CONSTANT, ClosureKind.SQRT_RELATIVE_TEMPERATURE):
            name = "s0" if self.kind is ClosureKind.CONSTANT else "mu"
            if self.value is None or not (self.value > 0 and math.isfinite(self.value)):
                raise ParameterError(name, f"must be finite and > 0, got {self.value!r}")
        elif self.value is not None:
            raise ParameterError("closure", f"{self.kind.value} takes no parameter")

    @classmethod
    def constant(cls, s0: float) -> SClosure:
        return cls(ClosureKind.CONSTANT, float(s0))

    @classmethod
    def sqrt_relative_temperature(cls, mu: float) -> SClosure:
        return cls(ClosureKind.SQRT_RELATIVE_TEMPERATURE, float(mu))

    @classmethod
    def expected_relative_speed(cls) -> SClosure:
        return cls(ClosureKind.EXPECTED_RELATIVE_SPEED)

    @classmethod
    def hard_sphere(cls) -> SClosure:
        return cls(ClosureKind.HARD_SPHERE)


# --- collision rule -------------------------------------------------------------


def post_collision(v, w, n, params: ModelParams) -> np.ndarray:
    """Post-collisional velocity of the inelastic particle.

    Works on single 3-vectors or on ``(N, 3)`` stacks; ``n`` must be unit
    length row by row.
    """
    v = np.asarray(v, dtype=float)
    w = np.asarray(w, dtype=float)
    n = np.asarray(n, dtype=float)
    norms = np.linalg.norm(n, axis=-1)
    if np.any(np.abs(norms - 1.0) > UNIT_TOLERANCE):
        raise DomainError(f"collision direction must be a unit vector, |n| = {norms}")
    return _post_collision(v, w, n, effective_coefficient(params))


def _post_collision(v, w, n, a: float) -> np.ndarray:
    qn = np.sum((v - w) * n, axis=-1, keepdims=True)
    return v - 2.0 * a * qn * n


# --- Maxwellians ----------------------------------------------------------------


def maxwellian_pdf(ms: MomentState, v) -> np.ndarray | float:
    """rho / (2 pi T)^{3/2} exp(-|v - u|^2 / (2T)); ``v`` may be a stack of vectors."""
    if ms.T is None or not ms.T > 0:
        raise DomainError(f"Maxwellian needs T > 0, got {ms.T!r}")
    rho, u, T = ms.require()
    d = np.asarray(v, dtype=float) - u
    out = rho / (2.0 * math.pi * T) ** 1.5 * np.exp(-np.sum(d * d, axis=-1) / (2.0 * T))
    return float(out) if np.ndim(out) == 0 else out


def sample_maxwellian(rng: np.random.Generator, u, T: float, size: int | None = None) -> np.ndarray:
    """Draw velocities ``u + sqrt(T) g`` with ``g`` a standard 3D Gaussian."""
    u = np.asarray(u, dtype=float)
    if T < 0:
        raise DomainError(f"temperature must be >= 0, got {T!r}")
    shape = (3,) if size is None else (size, 3)
    if T == 0:
        return np.broadcast_to(u, shape).copy()
    return u + math.sqrt(T) * rng.standard_normal(shape)


# --- equilibria -----------------------------------------------------------------


def equilibrium_temperature_sharp(params: ModelParams, T1: float) -> float:
    """Hard-sphere stationary temperature quoted alongside the equilibrium Maxwellian."""
    al, be = params.alpha, params.beta
    return (1.0 - al) * (1.0 - be) / (1.0 - al * (1.0 - be)) * T1


def equilibrium_temperature_model(params: ModelParams, T1: float) -> float:
    """Exact stationary temperature a T1 / (1 - a) of the pseudo-Maxwellian jump process."""
    a = effective_coefficient(params)
    return model_fixed_point_temperature(a, T1)


def model_fixed_point_temperature(a: float, T1: float) -> float:
    if a >= 1.0:
        raise DomainError(f"no finite equilibrium for effective coefficient a = {a!r} >= 1")
    return a * T1 / (1.0 - a)


def relative_temperature(ms: MomentState, u1) -> float:
    """Second moment about the background velocity divided by 3 rho: T + |u - u1|^2 / 3."""
    _, u, T = ms.require()
    d = u - np.asarray(u1, dtype=float)
    return T + float(d @ d) / 3.0


# --- mean relative speed ------------------------------------------------------------


def mean_gaussian_distance(g, var) -> np.ndarray:
    """E|g e + sqrt(var) xi| for a standard 3D Gaussian ``xi`` (vectorised in ``g``)."""
    g = np.abs(np.asarray(g, dtype=float))
    var = np.asarray(var, dtype=float)
    sigma = np.sqrt(var)
    small = g < 1e-8 * sigma
    gs = np.where(small, 1.0, g)
    far = (
        sigma * math.sqrt(2.0 / math.pi) * np.exp(-(g * g) / (2.0 * var))
        + (g + var / gs) * erf(g / np.sqrt(2.0 * var))
    )
    near = 2.0 * sigma * math.sqrt(2.0 / math.pi) * (1.0 + g * g / (6.0 * var))
    out = np.where(small, near, far)
    return float(out) if out.ndim == 0 else out


def mean_relative_speed_Z(v, bg: BackgroundState) -> np.ndarray | float:
    """Z(v) = integral of |v - w| M1(w) dw (carries the factor rho1).

    Accepts one velocity or an ``(N, 3)`` stack.
    """
    d = np.asarray(v, dtype=float) - bg.u1
    g = np.sqrt(np.sum(d * d, axis=-1))
    return bg.rho1 * mean_gaussian_distance(g, bg.T1)


def expected_relative_speed(ms: MomentState, bg: BackgroundState) -> float:
    """Mean |v - w| for v drawn from the closure Maxwellian and w from the background.

    The difference of two independent isotropic Gaussians is again Gaussian,
    so the double integral collapses to the mean distance with variance T + T1.
    """
    _, u, T = ms.require()
    g = float(np.linalg.norm(u - bg.u1))
    return float(mean_gaussian_distance(g, T + bg.T1))


def expected_relative_speed_quadrature(
    ms: MomentState, bg: BackgroundState, order: int = DEFAULT_QUADRATURE_ORDER
) -> float:
    """Same quantity as :func:`expected_relative_speed`, by tensor Gauss-Hermite quadrature of Z."""
    _, u, T = ms.require()
    x, w = np.polynomial.hermite_e.hermegauss(order)
    w = w / w.sum()
    X, Y, Zc = np.meshgrid(x, x, x, indexing="ij")
    W = (w[:, None, None] * w[None, :, None] * w[None, None, :]).ravel()
    nodes = u + math.sqrt(T) * np.stack([X.ravel(), Y.ravel(), Zc.ravel()], axis=1)
    return float(W @ mean_relative_speed_Z(nodes, bg)) / bg.rho1


def evaluate_S(closure: SClosure, state, bg: BackgroundState) -> float:
    """Value of S for a :class:`MomentState` or for an ensemble-like object.

    Ensemble-like objects expose ``v`` (an ``(N, 3)`` velocity array); every
    particle carries the same weight so plain means are weighted means.
    """
    kind = closure.kind
    if kind is ClosureKind.HARD_SPHERE:
        raise ClosureMisuseError("the hard-sphere kernel has no scalar S; the kinetic solver thins on |v - w|")
    if kind is ClosureKind.CONSTANT:
        return closure.value
    if isinstance(state, MomentState):
        if kind is ClosureKind.SQRT_RELATIVE_TEMPERATURE:
            return closure.value * math.sqrt(relative_temperature(state, bg.u1))
        return expected_relative_speed(state, bg)
    v = np.asarray(state.v, dtype=float)
    if len(v) == 0:
        raise UndefinedMomentError("S is undefined for an empty ensemble")
    if kind is ClosureKind.SQRT_RELATIVE_TEMPERATURE:
        d = v - bg.u1
        return closure.value * math.sqrt(float(np.mean(np.sum(d * d, axis=1))) / 3.0)
    return float(np.mean(mean_relative_speed_Z(v, bg))) / bg.rho1


def S_from_fields(closure: SClosure, u, T, bg: BackgroundState) -> np.ndarray:
    """Vectorised :func:`evaluate_S` on closure-Maxwellian fields ``u`` (..., 3) and ``T`` (...)."""
    kind = closure.kind
    T = np.asarray(T, dtype=float)
    if kind is ClosureKind.HARD_SPHERE:
        raise ClosureMisuseError("the hard-sphere kernel has no scalar S")
    if kind is ClosureKind.CONSTANT:
        return np.full(T.shape, closure.value)
    d = np.asarray(u, dtype=float) - bg.u1
    rel2 = np.sum(d * d, axis=-1)
    if kind is ClosureKind.SQRT_RELATIVE_TEMPERATURE:
        return closure.value * np.sqrt(T + rel2 / 3.0)
    return np.asarray(mean_gaussian_distance(np.sqrt(rel2), T + bg.T1))


def collision_rate(params: ModelParams, bg: BackgroundState, S):
    """Per-particle collision frequency rate_constant * S * rho1 / lambda."""
    if params.collisionless:
        return 0.0 * S
    return params.rate_constant * S * bg.rho1 / params.lam
