"""Exception types shared across the package."""


class RationalParseError(ValueError):
    """Text is not a plain integer or `p/q` fraction."""


class SchemeError(ValueError):
    """Invalid scheme definition or parameter."""


class SchemeRangeError(SchemeError):
    """Row index outside the range the scheme defines."""


class InfeasibleError(ValueError):
    """Transport marginals do not balance."""


class CertificationError(RuntimeError):
    """An internal exactness certificate failed; indicates a solver bug."""


class UnsupportedError(RuntimeError):
    """Operation not defined for this scheme/mode (reported, not a crash)."""


class NonPolynomialError(RuntimeError):
    """Sampled target failed polynomial validation at the degree cap."""
