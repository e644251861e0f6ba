"""Mixing coefficients, contraction bounds, and concentration
inequalities for Markov processes indexed by finite rooted trees."""

__version__ = "0.1.0"

from .concentration import (
    BoundReport,
    DeviationEstimate,
    MixingMatrix,
    build_mixing_matrices,
    delta_inf_norm,
    gamma_l2_norm,
    hamming_lipschitz_constant,
    linf_operator_norm,
    monte_carlo_deviation,
    tail_bound,
)
from .mixing import (
    EtaReport,
    FactorizationTrace,
    J0Reduction,
    LinearGrowthBound,
    eta_bar_bound_levels,
    eta_bar_bound_linear_growth,
    eta_bar_bound_uniform,
    eta_bar_exact,
    eta_exact,
    eta_factorization,
    eta_report,
    geometric_rate,
    reduce_via_j0,
)
from .model import (
    EnumerationLimitError,
    Kernel,
    MarkovTreeModel,
    conditional_future_law,
    contraction_coefficient,
    enumeration_cap,
    joint_probability,
    max_contraction,
    sample_paths,
    verify_markov_property,
)
from .modelfile import (
    ModelFileError,
    parse_model_file,
    random_model,
    save_model,
    serialize_model,
)
from .treegraph import (
    CutSets,
    TreeStructureError,
    TreeTopology,
    build_tree,
    cut_sets,
    first_descendant_at_or_after,
    subtree,
)
from .tvalgebra import (
    IndexedTensor,
    StochasticOperator,
    alpha,
    apply_operator,
    expand_operator_inputs,
    operator_tv_norm,
    stochastic_tensor_product,
    tensor_product,
    tv_distance,
)
from .verification import SuiteResult, run_verification

__all__ = [
    "BoundReport",
    "CutSets",
    "DeviationEstimate",
    "EnumerationLimitError",
    "EtaReport",
    "FactorizationTrace",
    "IndexedTensor",
    "J0Reduction",
    "Kernel",
    "LinearGrowthBound",
    "MarkovTreeModel",
    "MixingMatrix",
    "ModelFileError",
    "StochasticOperator",
    "SuiteResult",
    "TreeStructureError",
    "TreeTopology",
    "alpha",
    "apply_operator",
    "build_mixing_matrices",
    "build_tree",
    "conditional_future_law",
    "contraction_coefficient",
    "cut_sets",
    "delta_inf_norm",
    "enumeration_cap",
    "eta_bar_bound_levels",
    "eta_bar_bound_linear_growth",
    "eta_bar_bound_uniform",
    "eta_bar_exact",
    "eta_exact",
    "eta_factorization",
    "eta_report",
    "expand_operator_inputs",
    "first_descendant_at_or_after",
    "gamma_l2_norm",
    "geometric_rate",
    "hamming_lipschitz_constant",
    "joint_probability",
    "linf_operator_norm",
    "max_contraction",
    "monte_carlo_deviation",
    "operator_tv_norm",
    "parse_model_file",
    "random_model",
    "reduce_via_j0",
    "run_verification",
    "sample_paths",
    "save_model",
    "serialize_model",
    "stochastic_tensor_product",
    "subtree",
    "tail_bound",
    "tensor_product",
    "tv_distance",
    "verify_markov_property",
]
