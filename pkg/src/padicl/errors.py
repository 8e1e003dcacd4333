"""Exception hierarchy.

Every failure mode that the library promises to surface loudly has its own
class here, so callers (and the test suite) can distinguish "your input is
malformed" from "this quantity is not determined at the working precision".
"""


class PadicLError(Exception):
    """Base class for all library errors."""


class SpecMismatchError(PadicLError):
    """Operands belong to different ring specs / series rings / lifts."""


class NonUnitError(PadicLError):
    """Inversion of an element that is not a unit at this precision."""


class ValuationError(PadicLError):
    """Division by pi^k requested on an element with ord < k."""


class PrecisionError(PadicLError):
    """A result is not determined at the working precision.

    Raised for unresolved Newton polygon slopes, uncertifiable basis
    filtrations, Hensel lifts that exhaust the precision budget, and
    L-series comparisons below the shared precision floor.
    """


class CapError(PadicLError):
    """A degree cap is too small to certify the requested computation.

    Covers truncation-unsound substitutions, Dwork-operator basis caps
    without a tail certificate, and splitting-series caps too short for
    the target precision.
    """


class EnumerationCapError(PadicLError):
    """A point enumeration would exceed the configured resource guard."""


class OrdinarityError(PadicLError):
    """An operation requiring (partial) ordinarity met a non-ordinary input."""


class ConfigError(PadicLError):
    """Malformed run configuration."""
