"""Nonadaptive group testing: designs, decoders, rate theory, simulation lab."""

from .analysis import (
    CURVES,
    CapacityResult,
    bernoulli_capacity,
    binary_entropy,
    counting_bound,
    distinct_coupon_pmf,
    expected_distinct,
    g_conditional_pmf,
    li_zero_prob,
    mcdiarmid_tail,
    mi_pmf,
    mi_pmf_binomial_bound,
    phi,
    phi_exact,
    rate_of,
    stirling2,
    t_threshold,
    theoretical_rate,
)
from .decoders import (
    ALGORITHMS,
    DecodeResult,
    EvalRecord,
    MalformedOutcomeError,
    UnresolvedSearchError,
    comp,
    dd,
    evaluate,
    is_masked,
    is_satisfying,
    scomp,
    sss,
)
from .model import (
    DESIGN_KINDS,
    DefectiveSet,
    DesignParams,
    ItemStats,
    NuParams,
    OutcomeVector,
    TestDesign,
    compute_item_stats,
    design_from_json,
    design_to_json,
    gen_bernoulli,
    gen_exact_constant,
    gen_near_constant,
    generate_design,
    params_from_nu,
    possible_defectives,
    regenerate_design,
    run_tests,
    sample_defective_set,
)
from .simlab import (
    DesignArm,
    ExperimentConfig,
    ItemStatsSample,
    MaskingEstimate,
    SuccessCurve,
    SuccessPoint,
    collect_item_stats,
    estimate_sss_masking_lb,
    run_success_curve,
    wilson_interval,
)

__version__ = "0.1.0"

__all__ = [
    "ALGORITHMS",
    "CURVES",
    "DESIGN_KINDS",
    "CapacityResult",
    "DecodeResult",
    "DefectiveSet",
    "DesignArm",
    "DesignParams",
    "EvalRecord",
    "ExperimentConfig",
    "ItemStats",
    "ItemStatsSample",
    "MalformedOutcomeError",
    "MaskingEstimate",
    "NuParams",
    "OutcomeVector",
    "SuccessCurve",
    "SuccessPoint",
    "TestDesign",
    "UnresolvedSearchError",
    "bernoulli_capacity",
    "binary_entropy",
    "collect_item_stats",
    "comp",
    "compute_item_stats",
    "counting_bound",
    "dd",
    "design_from_json",
    "design_to_json",
    "distinct_coupon_pmf",
    "estimate_sss_masking_lb",
    "evaluate",
    "expected_distinct",
    "g_conditional_pmf",
    "gen_bernoulli",
    "gen_exact_constant",
    "gen_near_constant",
    "generate_design",
    "is_masked",
    "is_satisfying",
    "li_zero_prob",
    "mcdiarmid_tail",
    "mi_pmf",
    "mi_pmf_binomial_bound",
    "params_from_nu",
    "phi",
    "phi_exact",
    "possible_defectives",
    "rate_of",
    "regenerate_design",
    "run_success_curve",
    "run_tests",
    "sample_defective_set",
    "scomp",
    "sss",
    "stirling2",
    "t_threshold",
    "theoretical_rate",
    "wilson_interval",
]
