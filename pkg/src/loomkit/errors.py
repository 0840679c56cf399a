"""Exception hierarchy.

Every error carries a short ``code`` used as the greppable prefix of CLI
error lines (``error[<code>]: ...``).
"""


class LoomError(Exception):
    code = "LoomError"


class ZeroVector(LoomError, ValueError):
    code = "ZeroVector"


class PolarSingularity(LoomError, ValueError):
    code = "PolarSingularity"


class OutOfBounds(LoomError, ValueError):
    code = "OutOfBounds"


class BehindCamera(LoomError, ValueError):
    code = "BehindCamera"


class MissingRangePartials(LoomError, ValueError):
    code = "MissingRangePartials"


class TiltSingularity(LoomError, ValueError):
    code = "TiltSingularity"


class NonPositiveRange(LoomError, ValueError):
    code = "NonPositiveRange"


class NonPositiveDt(LoomError, ValueError):
    code = "NonPositiveDt"


class NonPositiveLooming(LoomError, ValueError):
    code = "NonPositiveLooming"


class ZeroTranslation(LoomError, ValueError):
    code = "ZeroTranslation"


class NearZeroGroundTruth(LoomError, ValueError):
    code = "NearZeroGroundTruth"


class DegeneratePatch(LoomError, ValueError):
    code = "DegeneratePatch"


class ParallelRay(LoomError, ValueError):
    code = "ParallelRay"


class EdgeOnSurface(LoomError, ValueError):
    code = "EdgeOnSurface"


class BadMagic(LoomError, ValueError):
    code = "BadMagic"


class TruncatedFile(LoomError, ValueError):
    code = "TruncatedFile"


class DimensionMismatch(LoomError, ValueError):
    code = "DimensionMismatch"


class BadThresholds(LoomError, ValueError):
    code = "BadThresholds"


class ConfigError(LoomError, ValueError):
    code = "ConfigError"
