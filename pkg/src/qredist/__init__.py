"""Quantum state redistribution at desk scale: states, entropies, convex split,
protocols and Q^eps estimates.
"""

from .convex_split import (
    ConvexSplitInstance,
    MemoryCapError,
    SplitReport,
    build_tau,
    canonical_purification_of_tau,
    commuting_stage_terms,
    derivation_diagnostics,
    lemma_n,
    make_instance,
    verify_lemma,
)
from .entropies import (
    QuantityResult,
    cond_mutual_info,
    dmax,
    entropy,
    fidelity,
    fidelity_of_recovery,
    hmax,
    hmin,
    imax,
    mutual_info,
    purified_distance,
    rel_entropy,
    smooth,
)
from .linalg import (
    DensityOperator,
    InvalidStateError,
    IsometryMap,
    LayoutError,
    RegisterLayout,
    StateVector,
    partial_trace,
    permute,
    purify,
    random_state,
    relabel,
    tensor,
)
from .protocols import (
    ConstraintError,
    MergeReport,
    ProtocolTranscript,
    RedistributionInput,
    merge,
    redistribute,
    split,
    superdense_cost,
)
from .qeps import (
    AchievingPoint,
    QepsEstimate,
    RecoveryBound,
    bound_suite,
    qeps_lower_recovery,
    qeps_upper,
)
from .statefile import load_state, save_state

__version__ = "0.1.0"
