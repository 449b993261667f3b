"""
Max-product Kantorovich exponential sampling

Kernels, sampling operators, weighted-error analysis and the table reproduction
harness for approximation from exponentially spaced samples.
"""

__version__ = '26.10.17.1'

from .errors import (
    BoundInapplicableError,
    ConfigurationError,
    DegenerateIntervalError,
    DomainError,
    InvalidParameterError,
    KernelInadmissibleError,
    NumericFailureError,
    SamplingError,
)
from .kernel_bank import (
    KernelProfile,
    MomentEstimate,
    algebraic_sup_moment,
    kernel_zeta,
    make_bspline,
    make_fejer,
    make_jackson,
    resolve_kernel,
    sup_moment,
    tail_remainder,
)
from .sampling_ops import (
    Compact,
    SamplingScheme,
    WholeLine,
    apply_operator,
    cell_average,
    classical_exp_sampling,
    generalized_apply,
    index_set,
    lin_kernel,
    linear_kantorovich_apply,
    max_product_apply,
)
from .test_functions import TestFunction, parse_function_id
from .weighted_analysis import (
    ModulusEstimate,
    WeightContext,
    log_modulus,
    mellin_derivative,
    op_norm_bound_thm1,
    pointwise_bound_thm2,
    rate_bound_thm3,
    voronovskaja_probe,
    weight,
    weighted_norm,
)

__all__ = [
    'BoundInapplicableError',
    'Compact',
    'ConfigurationError',
    'DegenerateIntervalError',
    'DomainError',
    'InvalidParameterError',
    'KernelInadmissibleError',
    'KernelProfile',
    'ModulusEstimate',
    'MomentEstimate',
    'NumericFailureError',
    'SamplingError',
    'SamplingScheme',
    'TestFunction',
    'WeightContext',
    'WholeLine',
    'algebraic_sup_moment',
    'apply_operator',
    'cell_average',
    'classical_exp_sampling',
    'generalized_apply',
    'index_set',
    'kernel_zeta',
    'lin_kernel',
    'linear_kantorovich_apply',
    'log_modulus',
    'make_bspline',
    'make_fejer',
    'make_jackson',
    'max_product_apply',
    'mellin_derivative',
    'op_norm_bound_thm1',
    'parse_function_id',
    'pointwise_bound_thm2',
    'rate_bound_thm3',
    'resolve_kernel',
    'sup_moment',
    'tail_remainder',
    'voronovskaja_probe',
    'weight',
    'weighted_norm',
]
