"""Exception hierarchy for condwalk."""


class CondWalkError(Exception):
    """Base class for every error raised by this package."""


class LawError(CondWalkError, ValueError):
    """An increment law failed validation."""


class NonZeroMean(LawError):
    pass


class DegenerateLaw(LawError):
    pass


class BadProbabilities(LawError):
    pass


class NotLattice(LawError):
    pass


class UnsupportedLaw(LawError):
    """Operation requires a different kind of law (lattice vs non-lattice)."""


class DomainError(CondWalkError, ValueError):
    pass


class QuadratureFailure(CondWalkError, ArithmeticError):
    pass


class OffLattice(CondWalkError, ValueError):
    pass


class LatticeMismatch(CondWalkError, ValueError):
    """y - x is not on the lattice reachable in n steps."""


class NonMonotone(CondWalkError, ArithmeticError):
    pass


class NotSkipFree(CondWalkError, ValueError):
    pass


class InsufficientTable(CondWalkError, KeyError):
    pass


class TableCoverage(InsufficientTable):
    pass


class KappaDisagreement(CondWalkError, ArithmeticError):
    pass


class SlowDecay(CondWalkError, ArithmeticError):
    pass


class ConfigError(CondWalkError, ValueError):
    pass
