"""Exception taxonomy shared across the package.

The CLI maps these onto exit codes: ConfigError -> 2, the numeric guards
(everything else below) -> 3, OS-level I/O failures -> 4.
"""


class LabError(Exception):
    """Base class for package errors."""


class ConfigError(LabError):
    """Bad grammar, invalid parameter, or a violated construction contract."""


class PrecisionExhausted(LabError):
    """A partial-quotient stream ran out before the requested precision."""


class SmallDivisorError(LabError):
    """A closed form hit an exact resonance (e(u alpha) == 1)."""


class GridResolutionError(LabError):
    """Quadrature or mesh grid too coarse for the requested spectrum."""


class SearchRangeError(LabError):
    """A search was asked to run over an empty range."""


class CapacityError(LabError):
    """A request would materialize more points than the configured cap."""
