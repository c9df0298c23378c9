"""Exception hierarchy shared by the solvers and the command-line harness."""

from __future__ import annotations


class LinBoltzError(Exception):
    """Base class for every error raised by the package."""


class ParameterError(LinBoltzError, ValueError):
    """An input parameter is outside its admissible range."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class DomainError(LinBoltzError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class UndefinedMomentError(LinBoltzError):
    """A velocity moment was requested where it is undefined (empty cell, rho == 0)."""


class ClosureMisuseError(LinBoltzError):
    """The hard-sphere closure has no scalar S and cannot be evaluated."""


class StepSizeError(LinBoltzError):
    """The time step violates a stability or accuracy guard."""


class MajorantViolationError(LinBoltzError):
    """A relative speed exceeded the thinning majorant."""

    def __init__(self, speed: float, majorant: float):
        self.speed = speed
        self.majorant = majorant
        super().__init__(
            f"relative speed {speed!r} exceeds the thinning majorant {majorant!r}; "
            "raise dsmc.majorant or dsmc.majorant_sigmas"
        )


class PositivityError(LinBoltzError):
    """A finite-volume cell lost positive density or internal energy."""

    def __init__(self, cells, message: str = "non-physical state"):
        self.cells = [int(c) for c in cells]
        shown = ", ".join(str(c) for c in self.cells[:10])
        more = "" if len(self.cells) <= 10 else f" (+{len(self.cells) - 10} more)"
        super().__init__(f"{message} in cells [{shown}]{more}")


class ConfigError(LinBoltzError):
    """Malformed or invalid scenario configuration."""

    def __init__(self, message: str, line: int | None = None, key: str | None = None):
        self.line = line
        self.key = key
        where = []
        if line is not None:
            where.append(f"line {line}")
        if key is not None:
            where.append(f"key {key!r}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class IncompatibleRunsError(LinBoltzError):
    """Two run directories cannot be compared."""

    def __init__(self, differing: dict[str, tuple[str | None, str | None]]):
        self.differing = differing
        lines = [f"  {k}: {a!r} vs {b!r}" for k, (a, b) in sorted(differing.items())]
        super().__init__("runs are incompatible; differing meta keys:\n" + "\n".join(lines))
