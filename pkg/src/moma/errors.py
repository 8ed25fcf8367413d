"""Exception hierarchy shared by all moma modules."""


class MomaError(Exception):
    """Base class for every error raised by this package."""


class InvalidArgument(MomaError, ValueError):
    """A caller-supplied argument violates a documented precondition."""


class NoValidPixels(MomaError):
    """A depth map has no valid pixels under the requested mask."""


class DimensionMismatch(MomaError):
    """Two rasters (or a raster and a model) disagree on width/height."""


class EmptyAfterPairing(MomaError):
    """Every calibration sample landed on an invalid predicted pixel."""


class DegenerateRange(MomaError):
    """Min-max normalization is undefined: the map is constant."""


class DegenerateMAD(MomaError):
    """Median/MAD normalization is undefined: zero mean absolute deviation."""


class DegenerateDesign(MomaError):
    """A least-squares design is singular (e.g. all predicted depths equal)."""


class ZeroFocal(MomaError):
    """A pseudo focal length of zero makes back-projection undefined."""


class NonFinite(MomaError):
    """Residuals or inputs contain NaN/inf, signalling corrupt data."""


class DegenerateG(MomaError):
    """The pixel gain field vanishes somewhere, so inversion is impossible."""


class EmptyScene(MomaError):
    """A synthetic scene contains no geometry to render."""
