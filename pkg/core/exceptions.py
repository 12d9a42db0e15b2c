"""
Error hierarchy for geometry, relaxation and config handling.

Management commands turn any PackingError into a CommandError with exit
code 1, so services raise these instead of returning error dicts.
"""

from typing import Optional


class PackingError(Exception):
    """Base class for every error raised by the toolkit."""


class GeometryValidationError(PackingError, ValueError):
    """Shape violates its construction invariants."""


class LevelSetDomainError(PackingError, ValueError):
    """Query or precompute step falls outside the level-set grid."""


class UndefinedNormalError(PackingError, ArithmeticError):
    """Level-set gradient vanishes (skeleton point)."""


class KernelArgumentError(PackingError, ValueError):
    pass


class SeedingError(PackingError):
    pass


class InconsistentGeometryError(PackingError):
    """Inner and outer level sets disagree on the shared interface."""


class UnknownBodyError(PackingError, KeyError):
    pass


class GeometryFormatError(PackingError, ValueError):
    """Polygon CSV or STL file could not be turned into a valid shape."""

    def __init__(self, message: str, line: Optional[int] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ConfigError(PackingError, ValueError):
    """Run configuration is malformed; names the offending key and line."""

    def __init__(self, message: str, key: Optional[str] = None, line: Optional[int] = None):
        self.key = key
        self.line = line
        where = []
        if key is not None:
            where.append(f"key '{key}'")
        if line is not None:
            where.append(f"line {line}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class ParticleFileError(PackingError, OSError):
    """Particle or energy file could not be written or read back."""
