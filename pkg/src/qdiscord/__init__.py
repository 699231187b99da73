"""Multiparty quantum discord, partition coarsening, and monogamy checks."""

from .qstate import (
    DensityMatrix,
    InvariantError,
    SubsystemLabel,
    load_state,
    make_labels,
    make_named_state,
    mutual_information,
    partial_trace,
    permute_subsystems,
    relative_entropy,
    sample_random_state,
    save_state,
    tensor,
    von_neumann_entropy,
)
from .partition import (
    ALL_MOVES,
    CoarseningChain,
    CoarseningMove,
    MoveKind,
    Partition,
    apply_move,
    coarser_set,
    is_coarser,
    xi_set,
)
from .measure import (
    MeasurementTree,
    ProductMeasurement,
    ProjectiveBasis,
    apply_basis,
    apply_product,
    apply_tree,
    computational_basis,
    conditional_entropy_post,
    random_basis,
)
from .optimizer import OptimizerConfig, OptResult, minimize
from .discord import (
    ConsistencyError,
    DiscordResult,
    MeasureKind,
    d_quantity,
    evaluate,
    gqd,
    gqd_defect,
    mqd,
    qd_bipartite,
)
from .monogamy import (
    InequalityCheck,
    MonogamyReport,
    check_complete,
    check_discorrelated,
    check_proposition,
    is_classical_on,
    monogamy_alpha,
    scan_assumptions,
)

__version__ = "0.1.0"
