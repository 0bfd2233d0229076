"""Exception types shared across the package."""


class HomlabError(Exception):
    """Base class for all package errors."""


class InvalidProfile(HomlabError):
    """Boundary profile violates positivity, periodicity, Lipschitz or
    single-interval fiber requirements."""


class OutsideDomain(HomlabError):
    """Point lies above the upper envelope of the boundary profile."""


class ResolutionTooCoarse(HomlabError):
    """Mesh resolution does not resolve the oscillation."""


class DegeneratePlusLayerWarning(UserWarning):
    """Upper layer has zero thickness; the limit mesh covers only the
    non-oscillating region."""


class MeshFieldMismatch(HomlabError):
    """Field values do not conform to the mesh they are paired with."""


class NonConvergence(HomlabError):
    """Nonlinear iteration failed to reach the requested tolerance."""

    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class MissingRegionTags(HomlabError):
    """Mesh lacks the region tags required by the solver."""


class SingularColumn(HomlabError):
    """A vertex column in the upper region has no coupling path to the
    lower region; the degenerate system would be singular."""


class EpsMeshMismatch(HomlabError):
    """Requested oscillation parameter does not match the mesh."""


class MismatchedMeshes(HomlabError):
    """Two fields expected on related meshes disagree on geometry."""


class PointOutsideDomain(HomlabError):
    """Evaluation point lies outside the meshed domain."""


class UnknownRegionTag(HomlabError):
    """Region tag not present in the mesh."""


class HypothesisViolation(HomlabError):
    """Operator fails a structural hypothesis (monotonicity, coercivity
    or growth) at a sampled point."""


class BracketFailure(HomlabError):
    """Root bracketing for the horizontal flux component failed within
    the admissible search range."""


class IncompatibleGeometry(HomlabError):
    """Fields built from different boundary profiles cannot be compared."""


class ConfigError(HomlabError):
    """Run configuration is malformed."""

    def __init__(self, message, path="$"):
        super().__init__(f"{path}: {message}")
        self.path = path
