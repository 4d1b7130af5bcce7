"""Exception hierarchy shared by all roughness modules.

Two groups matter to callers: input errors (bad arguments, malformed
files) and numerical degeneracies (the data admits no estimate). The CLI
maps the former to exit code 2 and the latter to exit code 3; the HTTP
service maps them to 400 and 422.
"""


class RoughnessError(Exception):
    """Base class for all errors raised by this package."""


class InputError(RoughnessError):
    """The caller supplied arguments or data that violate a precondition."""


class DegeneracyError(RoughnessError):
    """The computation is well posed but the data degenerates numerically."""


# -- input errors -------------------------------------------------------------

class LengthMismatch(InputError):
    """Sample count is not 2**n + 1 for the stated resolution."""


class NonFinite(InputError):
    """A sample is NaN or infinite."""


class DepthExceeded(InputError):
    """Requested synthesis level exceeds the pyramid depth."""


class IndexOutOfRange(InputError):
    """Basis-function or coarsening index outside its admissible range."""


class InvalidP(InputError):
    """Variation order p must be positive."""


class LevelExceedsResolution(InputError):
    """Requested dyadic level is finer than the series resolution."""


class ResourceLimit(InputError):
    """Request exceeds a configured size cap (e.g. branch enumeration)."""


class WindowTooDeep(InputError):
    """Estimator window reaches below level 1 (needs n >= m + 2)."""


class InvalidNu(InputError):
    """Block exponent nu exceeds the coefficient level."""


class OutOfBounds(InputError):
    """Window does not fit inside the source series."""


class SeriesTooShort(InputError):
    """Source series shorter than one estimation window."""


class InvalidH(InputError):
    """Hurst parameter outside (0, 1)."""


class ParseError(InputError):
    """A CSV row could not be parsed; carries the 1-based line number."""

    def __init__(self, line: int, message: str = ""):
        self.line = line
        super().__init__(message or f"unparseable value at line {line}")


class EmptyInput(InputError):
    """Input file contains no data rows."""


class TooShort(InputError):
    """Fewer than 3 usable samples."""


# -- numerical degeneracies ----------------------------------------------------

class DegeneratePath(DegeneracyError):
    """The path is constant on the dyadic grid (zero coefficient energy)."""


class DegenerateDesign(DegeneracyError):
    """The weight configuration gives the regression no spread to fit."""


class ZeroMoment(DegeneracyError):
    """Branch moment vanished, so the sandwich ratio is undefined."""


class EmbeddingFailure(DegeneracyError):
    """Both the circulant embedding and the dense factorization failed."""
