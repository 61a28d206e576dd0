"""Peer-review assignments free of short review cycles."""

from cyclefree.core import (
    UNBOUNDED,
    Assignment,
    CycleReport,
    DegreeStats,
    ReviewCycle,
    ReviewInstance,
    SolveParams,
    ValidityReport,
    assignment_weight,
    cycle_exposure,
    degree_stats,
    find_review_cycles,
    is_valid_assignment,
    is_z_cycle_free,
    validate_instance,
)
from cyclefree.errors import (
    DatasetError,
    ForeignEdgeError,
    FormatError,
    GeneratorError,
    GreedyStuckError,
    NoWeightsError,
    OracleTooLargeError,
    ReviewError,
    SwapExhaustedError,
)
from cyclefree.exact import (
    Limits,
    SolveStats,
    brute_force_oracle,
    max_weight_assignment,
    max_weight_zcycle_free,
)
from cyclefree.gadgets import (
    gen_2in4_gadget,
    gen_mis_gadget,
    gen_sat_gadget,
    pad_min_degrees,
    qualifications_to_weights,
)
from cyclefree.heuristics import (
    GuaranteeVerdict,
    check_cor1,
    check_prop3,
    check_prop4,
    check_thm4,
    greedy_dag,
    greedy_swap,
    swap_context,
)
from cyclefree.instances import (
    RandomControls,
    SampleSpec,
    SimilarityDataset,
    SplitMix64,
    gen_random,
    load_dataset,
    sample_instance,
    synthetic_dataset,
)

__version__ = "0.1.0"
