"""Exception types shared across the package.

Every failure mode that callers are expected to handle gets its own class;
generic ValueError is reserved for plain programming errors.
"""


class MetricSphereError(Exception):
    """Base class for all package-specific errors."""


# ---------------------------------------------------------------- metric side

class ZeroDenominator(MetricSphereError):
    """Cross-ratio denominator vanished for a non-degenerate tuple."""


class DegenerateContinuum(MetricSphereError):
    """A vertex set meant to act as a continuum has zero diameter."""


class EmptyScaleList(MetricSphereError):
    """No scales supplied to a covering estimator."""


class NotConnected(MetricSphereError):
    """Mesh adjacency is disconnected where connectivity is required."""


class BadRadius(MetricSphereError):
    """Non-positive or non-finite radius."""


class BadAlpha(MetricSphereError):
    """Snowflake exponent outside (0, 1)."""


# ------------------------------------------------------------ approximations

class NotASphereMesh(MetricSphereError):
    """Triangle complex fails the Euler-characteristic-2 check."""


class NonManifoldEdge(MetricSphereError):
    """An edge of a triangle complex is not shared by exactly two faces."""


class EmptyGraph(MetricSphereError):
    """Operation on an approximation with no vertices."""


class UnknownVertex(MetricSphereError):
    """Vertex id outside the graph."""


class MeshTooCoarse(MetricSphereError):
    """Pushforward requires mesh(A) < diam(X)/2."""


class EmptyInfimumSet(MetricSphereError):
    """No sample point realizes the infimum defining a pushed-forward radius."""


class LevelTooDeep(MetricSphereError):
    """Requested refinement level beyond the supported cap."""


# ----------------------------------------------------------------- modulus

class DisconnectedError(MetricSphereError):
    """No chain joins the two vertex sets."""


class NonConvergence(MetricSphereError):
    """Iterative solver hit its iteration cap before certifying a solution."""


class InclusionViolated(MetricSphereError):
    """Shifted sets are not inside the required combinatorial neighborhoods."""


class SeparationTooSmall(MetricSphereError):
    """Relative distance below the threshold the construction requires."""


class AnnulusCountZero(MetricSphereError):
    """Telescoping construction admits no annulus between the continua."""


# ----------------------------------------------------------------- packing

class NotATriangulation(MetricSphereError):
    """Input complex is not a triangulated 2-sphere."""


class IterationDiverged(MetricSphereError):
    """Radius iteration or layout failed to meet its residual target."""


class DegenerateTriple(MetricSphereError):
    """Normalization triple admits no common orthogonal circle."""


# ----------------------------------------------------------------- pipeline

class TripleTooClose(MetricSphereError):
    """Normalization triple is not well-spread in the source sphere."""


class SeparationViolated(MetricSphereError):
    """Continuum pair fails the combinatorial separation precondition."""


class ConfigInvalid(MetricSphereError):
    """Run configuration failed validation."""


class FileMissing(MetricSphereError):
    """Input artifact not found or unreadable."""


class DomainTooSmall(MetricSphereError):
    """Map domain has too few points for the requested statistic."""
