"""Quantum Bell inequality certificates, faces of the no-signaling polytope,
singlet self-testing and common quantum/classical XOR-game faces."""

__version__ = "0.1.0"

from .boxes import (  # noqa: F401
    FLOAT,
    RATIONAL,
    BellScenario,
    Box,
    CorrelatorTable,
    EventIndex,
    Relabeling,
    apply_relabeling,
    box_from_json,
    box_of_correlators,
    box_to_json,
    correlators_of,
    enumerate_local_deterministic,
    mix,
    pr_box,
    uniform_box,
    validate_no_signaling,
)
from .certificates import (  # noqa: F401
    CertificateMatrix,
    ExclusionReport,
    build_certificate,
    build_ring_certificate,
    certificate_value,
    exclude_by_analytic,
    is_valid_certificate,
)
from .chains import ChainedSequence, canonical_placements, find_chained_sequence  # noqa: F401
from .faces import (  # noqa: F401
    FaceSpec,
    face_box,
    face_dimension,
    local_membership,
    pr_neighbors,
)
from .graphs import OrthogonalityGraph, build_orthogonality_graph, maximal_cliques  # noqa: F401
from .sdp import (  # noqa: F401
    SdpProblem,
    SdpResult,
    project_psd,
    solve_certificate_sdp,
    solve_elliptope_bias,
)
from .selftest import (  # noqa: F401
    AngleTable,
    ControlOperators,
    PlanarModel,
    WeightedChain,
    boundary_residual,
    boundary_weights,
    canonical_chained_model,
    chain_value,
    classical_chain_max,
    control_operators,
    correlators_from_model,
    swap_isometry_fidelity,
    tlm_residual,
    verify_self_test_conditions,
)
from .xorgames import (  # noqa: F401
    build_game,
    classical_bias,
    general_position_check,
    hadamard,
    is_diagonal_in_hadamard_basis,
    lexicographic_vectors,
    star,
    verify_block_structure,
)
