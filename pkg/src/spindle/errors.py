"""Exception hierarchy shared by all spindle modules."""


class SpindleError(Exception):
    """Base class for every error raised by this package."""


class GeometryError(SpindleError, ValueError):
    pass


class ChordTooLong(GeometryError):
    pass


class DegenerateChord(GeometryError):
    pass


class OutOfRange(GeometryError):
    pass


class InvalidPolygon(GeometryError):
    pass


class ModelError(SpindleError, ValueError):
    pass


class InvalidModel(ModelError):
    pass


class SamplerStall(ModelError):
    pass


class QuadratureFailure(SpindleError, ArithmeticError):
    pass


class RadiusNotAdmissible(ModelError):
    pass


class HullError(SpindleError):
    pass


class EmptyInput(HullError, ValueError):
    pass


class NoEnclosingDisc(HullError, ValueError):
    """No disc of the requested radius contains the whole point set."""


class VertexOutsideModel(HullError, ValueError):
    pass


class CapError(SpindleError, ValueError):
    pass


class HeightOutOfRange(CapError):
    pass


class IntersectionNotFound(CapError):
    pass


class PointsOutsideModel(CapError):
    pass


class DegenerateTriangle(CapError):
    pass


class ExperimentError(SpindleError):
    pass


class ConfigError(ExperimentError, ValueError):
    pass


class InsufficientReplications(ExperimentError, ValueError):
    pass


class NonpositiveValue(ExperimentError, ValueError):
    pass
