"""Exception types shared across the package."""


class PoseForgeError(Exception):
    """Base class for all package-specific errors."""


class PointBehindCameraError(PoseForgeError):
    """A 3D point has non-positive depth under the given pose."""


class ZeroNormQuaternionError(PoseForgeError):
    """Quaternion with (numerically) zero norm cannot encode a rotation."""


class NotARotationError(PoseForgeError):
    """Matrix is not orthonormal with determinant +1 within tolerance."""


class DegenerateGeometryError(PoseForgeError):
    """Input configuration is degenerate (collinear, coplanar, rank-deficient)."""


class CollinearPointsError(DegenerateGeometryError):
    """Three or more points are collinear where a non-degenerate set is required."""


class NoSolutionError(PoseForgeError):
    """A solver found no admissible solution for the given input."""


class NoConsensusError(PoseForgeError):
    """Robust estimation failed to find a consensus set of sufficient size."""


class EmptyMaskError(PoseForgeError):
    """No grid-cell center falls inside the projected object silhouette."""


class SceneFormatError(PoseForgeError):
    """Scene file is malformed or carries an unsupported version."""


class CheckpointError(PoseForgeError):
    """Checkpoint file is malformed, corrupt, or carries an unsupported version."""


class NonFiniteGradientError(PoseForgeError):
    """A gradient contained NaN or infinity; the optimizer step was aborted."""


class NonFiniteLossError(PoseForgeError):
    """Training loss became NaN or infinite."""


class VotingError(PoseForgeError):
    """A correspondence cluster yielded no valid crosspoint hypothesis."""
