"""Exception hierarchy shared by all geodspace modules."""


class GeodesicError(Exception):
    """Base class for every error raised by the toolkit."""


class NumericalFailure(GeodesicError):
    """A numerical procedure could not deliver its contract."""


class OutOfChart(GeodesicError):
    pass


class InsufficientSamples(GeodesicError):
    pass


class StepUnderflow(NumericalFailure):
    """Adaptive step fell below the floor; usually a chart singularity."""


class Inextendible(NumericalFailure):
    """The geodesic stops (leaves the chart) before the requested parameter."""


class NoConvergence(NumericalFailure):
    pass


class UnknownSpace(GeodesicError):
    pass


class BadParams(GeodesicError):
    pass


class UnknownCovering(GeodesicError):
    pass


class BadSheet(GeodesicError):
    pass


class AnchorNotFound(GeodesicError):
    pass


class OutsideDisc(GeodesicError):
    pass


class UnsupportedChart(GeodesicError):
    pass


class FootNotFound(NumericalFailure):
    pass


class MinimizationDiverged(NumericalFailure):
    pass


class NoRootFound(NumericalFailure):
    pass


class NoConnectionFound(GeodesicError):
    pass


class NotClosed(GeodesicError):
    pass
