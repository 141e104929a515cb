"""Exception types raised by the library."""


class GaborFockError(Exception):
    """Base class for all library errors."""


class UnboundedTailError(GaborFockError):
    pass


class TaylorCapError(GaborFockError):
    """Adaptive Taylor truncation hit the degree cap before meeting tolerance."""


class GridTooCoarseError(GaborFockError):
    pass


class DomainTooSmallError(GaborFockError):
    pass


class NotALatticePointError(GaborFockError, ValueError):
    pass


class InvalidPerturbationError(GaborFockError, ValueError):
    pass


class NotAZeroError(GaborFockError, ValueError):
    pass


class TooManyPointsError(GaborFockError, ValueError):
    pass


class LatticeCollisionError(GaborFockError, ValueError):
    pass
