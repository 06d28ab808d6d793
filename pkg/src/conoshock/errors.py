"""Exception hierarchy.

Every solver failure derives from ``ConoshockError`` so the CLI can turn it
into a machine-readable failure report.
"""


class ConoshockError(Exception):
    """Base class for all solver errors."""

    code = "error"

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DomainError(ConoshockError, ValueError):
    code = "domain"


class CavitationError(DomainError):
    code = "cavitation"


class RootNotFoundError(ConoshockError):
    code = "root_not_found"


class AmbiguousRootError(ConoshockError):
    code = "ambiguous_root"


class DegeneracyError(ConoshockError):
    code = "degeneracy"


class NoConeError(ConoshockError):
    code = "no_cone"


class SpectralProximityError(ConoshockError):
    code = "spectral_proximity"


class TruncationError(ConoshockError):
    code = "truncation"


class NonContractionError(ConoshockError):
    code = "non_contraction"


class FoldError(ConoshockError):
    code = "fold"


class ShockDegeneracyError(ConoshockError):
    code = "shock_degeneracy"


class AdmissibilityError(ConoshockError):
    code = "admissibility"


class ConfigError(ConoshockError, ValueError):
    code = "config"

    def __init__(self, message, line=None, **diagnostics):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, line=line, **diagnostics)
        self.line = line
