"""Exception hierarchy shared by the analytic, simulation and CLI layers."""


class BrownmaxError(Exception):
    """Base class for every error raised by this package."""


class InvalidParams(BrownmaxError, ValueError):
    pass


class NonConvergence(BrownmaxError, ArithmeticError):
    pass


class BracketFailure(BrownmaxError, ArithmeticError):
    pass


class PoleRegion(BrownmaxError, ValueError):
    """Laplace argument lies beyond the abscissa of convergence."""


class DomainError(BrownmaxError, ValueError):
    pass


class GridMismatch(BrownmaxError, ValueError):
    pass


class DoubleSingularity(BrownmaxError, ValueError):
    pass


class ResolutionTooCoarse(BrownmaxError, ValueError):
    pass


class SingularStep(BrownmaxError, ArithmeticError):
    pass


class InsufficientData(BrownmaxError, ValueError):
    pass
