"""Exception and warning types shared across the toolkit."""


class ScatterSceneError(Exception):
    """Base class for all scatterscene failures."""


class ShapeMismatchError(ScatterSceneError):
    """Two buffers that must share a shape do not."""


class TooSmallError(ScatterSceneError):
    """Image smaller than the minimum an operation supports."""


class NonFiniteError(ScatterSceneError):
    """A solver or trainer produced NaN/Inf; no partial result is returned."""


class ParseError(ScatterSceneError):
    """Malformed scene/pose input; message carries file and line/field context."""


class NonRigidPoseError(ParseError):
    """A pose rotation is not a proper rotation (det != +1 or far from orthonormal)."""


class UnsupportedCameraModelError(ParseError):
    """Camera model other than pinhole/simple-pinhole/simple-radial."""


class NonUnitQuaternionError(ScatterSceneError):
    """Quaternion norm deviates from 1 by more than the accepted tolerance."""


class MissingPoseError(ScatterSceneError):
    """Keyframe selection requires every frame to carry a pose."""


class ConfigError(ScatterSceneError):
    """Invalid or inconsistent configuration values."""


class ZeroSpreadWarning(UserWarning):
    """A colour channel had zero spread; statistical correction returned mid-gray."""


class RadialDistortionWarning(UserWarning):
    """A camera carries radial distortion that the parser records but ignores."""
