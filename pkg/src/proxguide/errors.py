"""Exception types raised across the package."""


class ProxGuideError(ValueError):
    """Base class for every error raised by proxguide."""


class InvalidDimension(ProxGuideError):
    pass


class InvalidProbability(ProxGuideError):
    pass


class InvalidScale(ProxGuideError):
    pass


class NumericFault(ProxGuideError, ArithmeticError):
    """A NaN or infinite value entered or left an operation."""


class InvalidStart(ProxGuideError):
    pass


class InvalidStrongConvexity(ProxGuideError):
    pass


class InvalidGamma(ProxGuideError):
    pass


class InvalidBeta(ProxGuideError):
    pass


class InvalidParams(ProxGuideError):
    pass


class DegenerateInstance(ProxGuideError):
    pass


class InvalidInstance(ProxGuideError):
    pass


class UnknownModulus(ProxGuideError):
    """The oracle declares no weak-convexity modulus; use the parameter-free driver."""


class UnsupportedDimension(ProxGuideError):
    pass


class InvalidConfig(ProxGuideError):
    pass


class EmptySummary(ProxGuideError):
    pass
