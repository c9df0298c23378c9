"""Inelastic particles relaxing in a thermal background: particle, moment and hydrodynamic solvers."""

from __future__ import annotations

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ClosureMisuseError,
    ConfigError,
    DomainError,
    IncompatibleRunsError,
    LinBoltzError,
    MajorantViolationError,
    ParameterError,
    PositivityError,
    StepSizeError,
    UndefinedMomentError,
)
from .model import (  # noqa: E402
    AlphaConvention,
    BackgroundState,
    ModelParams,
    MomentState,
    SClosure,
    derive_params,
    evaluate_S,
    post_collision,
)

__all__ = [
    "__version__",
    "AlphaConvention",
    "BackgroundState",
    "ClosureMisuseError",
    "ConfigError",
    "DomainError",
    "IncompatibleRunsError",
    "LinBoltzError",
    "MajorantViolationError",
    "ModelParams",
    "MomentState",
    "ParameterError",
    "PositivityError",
    "SClosure",
    "StepSizeError",
    "UndefinedMomentError",
    "derive_params",
    "evaluate_S",
    "post_collision",
]
