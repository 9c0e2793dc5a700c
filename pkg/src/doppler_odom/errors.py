"""Exception types raised by the estimation, calibration, and I/O layers."""


class DopplerOdomError(Exception):
    """Base class for all errors raised by this package."""


class ZeroRange(DopplerOdomError):
    """A point coincides with the sensor origin, so it has no direction."""


class EmptyScan(DopplerOdomError):
    """A scan contains no points."""


class InsufficientPoints(DopplerOdomError):
    """Fewer points than the operation needs."""


class DegenerateGeometry(DopplerOdomError):
    """Measurement directions do not span 3D well enough to solve."""


class NoConsensus(DopplerOdomError):
    """RANSAC could not find a model supported by enough inliers."""


class SingularGeometry(DopplerOdomError):
    """Vehicle geometry makes the angular-velocity map undefined."""


class NonMonotonicTimestamp(DopplerOdomError):
    """Timestamps went backwards (or repeated) where they must advance."""


class ParseError(DopplerOdomError):
    """Malformed file content.

    Carries the path and 1-based line number when known.
    """

    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix = f"{path}:"
            if line is not None:
                prefix += f"{line}:"
            prefix += " "
        elif line is not None:
            prefix = f"line {line}: "
        super().__init__(prefix + message)


class ValidationError(DopplerOdomError):
    """A value is syntactically fine but violates a documented invariant."""


class NoOverlap(DopplerOdomError):
    """Two trajectories share no usable common time span."""


class EmptyTrajectory(DopplerOdomError):
    """A trajectory has no poses."""


class InsufficientMotion(DopplerOdomError):
    """Too few samples above the calibration speed gate."""


class AmbiguousDirection(DopplerOdomError):
    """Motion directions conflict too much to define a forward axis."""


class InsufficientExcitation(DopplerOdomError):
    """The maneuver does not excite the quantity being calibrated."""


class NoReference(DopplerOdomError):
    """A required reference signal is missing or never overlaps in time."""


class DegenerateManeuver(DopplerOdomError):
    """The maneuver cannot identify the requested parameter."""
