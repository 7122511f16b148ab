"""Graph approximations, combinatorial moduli, and circle-packing
uniformization for discretized metric 2-spheres."""

__version__ = "0.1.0"

from .errors import (
    AnnulusCountZero,
    BadAlpha,
    BadRadius,
    ConfigInvalid,
    DegenerateContinuum,
    DegenerateTriple,
    DisconnectedError,
    DomainTooSmall,
    EmptyGraph,
    EmptyInfimumSet,
    EmptyScaleList,
    FileMissing,
    InclusionViolated,
    IterationDiverged,
    LevelTooDeep,
    MeshTooCoarse,
    MetricSphereError,
    NonConvergence,
    NonManifoldEdge,
    NotASphereMesh,
    NotATriangulation,
    NotConnected,
    SeparationTooSmall,
    SeparationViolated,
    TripleTooClose,
    UnknownVertex,
    ZeroDenominator,
)
from .metric_core import (
    ContinuumSample,
    FiniteMetricSpace,
    FourTuple,
    control_function,
    cross_ratio,
    cross_ratios_bulk,
    doubling_estimate,
    llc_witnesses,
    min_cross_ratio,
    min_cross_ratios_bulk,
    relative_distance,
    sample_four_tuples,
    set_diameter,
    set_distance,
    weak_uniform_perfectness,
)
from .spaces import (
    MeshedSphere,
    SNOWBALL_SIMILARITY_DIMENSION,
    alpha_patch_sphere,
    bilipschitz_warp,
    cap_grid_subsample,
    read_off,
    round_sphere,
    snowball,
    snowball_embedding_report,
    snowball_from_json,
    snowball_mesh,
    snowball_space,
    snowball_to_json,
    write_off,
)
from .approx import (
    ApproxGraph,
    ApproximationLadder,
    KApproximation,
    approximation_from_json,
    approximation_to_json,
    build_approximation,
    complex_approximation,
    continuum_in_some_star,
    greedy_net,
    max_separated_vertices,
    mesh_size,
    neighborhood,
    net_approximation,
    points_approximation,
    pushforward_approximation,
    star,
    verify_k_approximation,
    vertex_set_of,
)
from .modulus import (
    ModulusResult,
    annulus_modulus,
    decay_weight,
    ferrand_cr_graph,
    is_admissible,
    min_chain_sum,
    mod_q,
    neighborhood_comparison,
    smear_weights,
    telescope_weight,
)
from .packing import (
    SphericalPacking,
    balance_caps,
    caps_to_inversive,
    check_packing,
    induced_approximation,
    inversive_to_caps,
    mobius_normalize,
    pack_triangulation,
    ring_lemma_check,
)
from .uniformize import (
    DiscreteMap,
    default_triple,
    distortion_fit,
    envelope_value,
    level_coherence,
    lower_envelope,
    monotone_envelope,
    qs_distortion,
    relative_distance_transport,
    suff_condition_scan,
    two_scale_consistency,
    uniformize_level,
)
from .cli import RunConfig, load_config, main
