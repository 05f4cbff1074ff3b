"""Exception taxonomy shared across the package.

The CLI maps these onto process exit codes; library code raises them
directly so programmatic callers can discriminate failure modes.
"""


class LrcovError(Exception):
    """Base class for all package errors."""


class DataFormatError(LrcovError):
    """Input data could not be parsed (bad CSV cell, ragged rows, non-finite values)."""


class ConfigError(LrcovError):
    """Invalid or unknown configuration (bad flag value, unknown config key, bad spec)."""


class DimensionError(LrcovError, ValueError):
    """Objects defined on incompatible grids, or shapes that cannot be reconciled."""


class ContractViolationError(LrcovError):
    """A numeric precondition failed (asymmetric surface, degenerate data, h <= 0)."""


class KernelSpecError(LrcovError):
    """Kernel constants inconsistent with the kernel's own profile, or an
    operation that the kernel cannot support (flat-top in bias formulas)."""


class SeparationError(LrcovError):
    """Eigenvalue separation too small for the requested spectral inference."""
