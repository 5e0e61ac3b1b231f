"""Exception hierarchy shared by all glvortex modules."""


class GLVortexError(Exception):
    """Base class for every error raised by the package."""

    exit_code = 3


class GeometryError(GLVortexError):
    pass


class DegenerateTangent(GeometryError):
    pass


class SelfIntersection(GeometryError):
    pass


class ZeroChord(GeometryError):
    pass


class UnresolvedWinding(GLVortexError):
    pass


class OutsideDisk(GLVortexError):
    pass


class NonconvergentTail(GLVortexError):
    pass


class CompatibilityFailure(GLVortexError):
    pass


class QuadratureFailure(GLVortexError):
    pass


class MeshFailure(GLVortexError):
    pass


class SolverFailure(GLVortexError):
    pass


class TooCloseToBoundary(GLVortexError):
    pass


class NonMonotone(SolverFailure):
    pass


class PhaseClosureFailure(GLVortexError):
    pass


class NonconvergentLimit(GLVortexError):
    pass


class BoundaryArgmax(GLVortexError):
    pass


class NonClosedForm(GLVortexError):
    pass


class InverseFailure(GLVortexError):
    pass


class ModulusTooSmall(GLVortexError):
    pass


class NoReturn(GLVortexError):
    pass


class HolomorphyFailure(GLVortexError):
    pass


class ConfigError(GLVortexError):
    """Invalid experiment configuration; maps to CLI exit code 2."""

    exit_code = 2
