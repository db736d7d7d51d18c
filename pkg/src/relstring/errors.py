"""Exception hierarchy.

Every numerical failure raised by the library derives from
:class:`RelStringError`, so callers (the CLI in particular) can map it to a
single exit status while still reporting the specific error name.
"""


class RelStringError(Exception):
    """Base class for library errors."""


class NonRegularCurve(RelStringError):
    """The spatial derivative of a curve vanishes somewhere."""


class NotStrictlyAdmissible(RelStringError):
    """Some normal velocity reaches the speed of light."""


class TooFewSamples(RelStringError):
    pass


class NotNormalized(RelStringError):
    """Initial data violates |gamma_x|^2 + |gamma_t|^2 = 1."""


class NonZeroMeanVelocity(RelStringError):
    pass


class NotZeroVelocity(RelStringError):
    pass


class NotConvex(RelStringError):
    pass


class RootNotBracketed(RelStringError):
    pass


class MonotonicityLost(RelStringError):
    """A discrete reparametrization stopped being increasing."""


class OutsideDomain(RelStringError):
    """A (xi, eta) pair is space-like: the Lagrangian is not real there."""


class WrongDimension(RelStringError):
    pass


class NoCollapseAtTbar(RelStringError):
    pass


class OddK(RelStringError):
    pass


class ParamsInfeasible(RelStringError):
    pass


class BadEps(RelStringError):
    pass


class BadParams(RelStringError):
    pass
