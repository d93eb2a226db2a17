"""Exception hierarchy shared by all modules."""


class K3StabError(Exception):
    """Base class for every error raised by this package."""


class LatticeError(K3StabError, ValueError):
    pass


class DegenerateError(K3StabError, ValueError):
    """A charge vector is degenerate (section undefined, or not reduced)."""


class HoleHitError(K3StabError):
    """A tracked class has vanishing central charge."""


class StepTooLargeError(K3StabError):
    """A phase moved by half a turn or more within one step."""


class WallDataError(K3StabError):
    """Factor data at a wall is inconsistent or not determined by history."""


class NonTransverseCrossingError(K3StabError):
    """An alignment function touches zero without changing sign."""


class WallCollisionError(K3StabError):
    """Two walls fall within the parameter tolerance of each other."""


class LiftError(K3StabError, ValueError):
    """A polyline cannot be lifted (vertex on a cut, too close to a hole, ...)."""
