"""Exception hierarchy shared by all modules."""


class GibbsFisherError(Exception):
    """Base class for domain errors raised by the library."""


class ModelError(GibbsFisherError, ValueError):
    """A model or ensemble definition violates its invariants."""


class DegenerateModelError(GibbsFisherError):
    """Heat capacity (or an effective variance) vanishes, so F_S is undefined."""


class RangeError(GibbsFisherError, ArithmeticError):
    """A partition sum or requested parameter falls outside the representable range."""


class ConvergenceError(GibbsFisherError, RuntimeError):
    """An iterative solver failed to converge."""
