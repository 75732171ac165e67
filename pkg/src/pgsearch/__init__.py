"""Engine for computing pro-p Galois groups with restricted ramification by
pruned descendant search over power-conjugate presentations."""

from .linalg import FpMatrix, Subspace, enumerate_supplements, rref, smith_normal_form
from .pcgroup import (
    AbelianType,
    Homomorphism,
    PcError,
    PcGroup,
    SubgroupRecord,
    parse_pc,
    render_pc,
    truncation_homomorphism,
)
from .pcover import (
    Automorphism,
    DescendantRecord,
    FinitePresentation,
    OrbitCapExceeded,
    PCoverData,
    automorphism_group_elements,
    immediate_descendants,
    p_cover,
    p_quotient,
    parse_presentation,
    propagate_automorphisms,
)
from .constraints import (
    INFINITE_PLACE,
    PlaceConstraint,
    TargetData,
    WitnessSet,
    abelianization_test,
    candidate_test,
    derive_targets,
    dominated,
    rank_gap_test,
    witness_test,
)
from .galois import (
    PairClassification,
    RamificationFrame,
    classify_pair,
    conjecture_order_class,
    golod_shafarevich_infinite,
    hausdorff_ratios,
    legendre,
    predicted_presentation,
)
from .search import SearchConfig, SearchResult, emit_tree, resume_search, run_search

__all__ = [
    "AbelianType",
    "Automorphism",
    "DescendantRecord",
    "FinitePresentation",
    "FpMatrix",
    "Homomorphism",
    "INFINITE_PLACE",
    "OrbitCapExceeded",
    "PCoverData",
    "PairClassification",
    "PcError",
    "PcGroup",
    "PlaceConstraint",
    "RamificationFrame",
    "SearchConfig",
    "SearchResult",
    "SubgroupRecord",
    "Subspace",
    "TargetData",
    "WitnessSet",
    "abelianization_test",
    "automorphism_group_elements",
    "candidate_test",
    "classify_pair",
    "conjecture_order_class",
    "derive_targets",
    "dominated",
    "emit_tree",
    "enumerate_supplements",
    "golod_shafarevich_infinite",
    "hausdorff_ratios",
    "immediate_descendants",
    "legendre",
    "p_cover",
    "p_quotient",
    "parse_pc",
    "parse_presentation",
    "predicted_presentation",
    "propagate_automorphisms",
    "rank_gap_test",
    "render_pc",
    "resume_search",
    "rref",
    "run_search",
    "smith_normal_form",
    "truncation_homomorphism",
    "witness_test",
]
