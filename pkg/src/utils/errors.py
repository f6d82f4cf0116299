"""Exception hierarchy for conicsplat."""

from typing import Optional


class ConicSplatError(Exception):
    """Base class for every error raised by the library."""


class InvalidParameterError(ConicSplatError, ValueError):
    """A parameter is non-finite, out of range or inconsistent."""


class BehindCameraError(ConicSplatError):
    """A point that must lie in front of the camera has z <= 0."""


class DegenerateSplatError(ConicSplatError):
    """The projected 2D covariance is numerically singular."""


class IllConditionedError(ConicSplatError):
    """A covariance is too badly conditioned to invert reliably."""


class CameraInsideError(ConicSplatError):
    """The camera origin lies inside (or on) the 3-sigma ellipsoid."""


class NonEllipseConicError(ConicSplatError):
    """The tangent cone cuts the image plane in something other than an ellipse."""


class DimensionMismatchError(ConicSplatError, ValueError):
    """Two images (or arrays) that must match in shape do not."""


class OracleError(ConicSplatError):
    """A brute-force verifier could not establish its answer."""


class RenderError(ConicSplatError):
    """Accumulation produced a non-finite value."""

    def __init__(self, message: str, gaussian_index: Optional[int] = None):
        super().__init__(message)
        self.gaussian_index = gaussian_index


class FitDivergenceError(ConicSplatError):
    """The fitting loss became non-finite."""

    def __init__(self, message: str, iteration: int):
        super().__init__(message)
        self.iteration = iteration


class PlyParseError(ConicSplatError):
    """A PLY stream could not be parsed."""

    def __init__(self, message: str, offset: int):
        super().__init__(f"{message} (at byte {offset})")
        self.offset = offset


class CameraFormatError(ConicSplatError):
    """A camera text line could not be parsed or validated."""

    def __init__(self, message: str, line: int):
        super().__init__(f"line {line}: {message}")
        self.line = line
