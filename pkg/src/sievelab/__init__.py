"""sievelab: a desk-scale verification laboratory for combinatorial sieve
weight systems, exponential-sum bounds, Type-I variance decompositions, and
exact censuses of almost primes in short arithmetic progressions."""

__version__ = "0.1.0"

from .arith import (
    FactoredInteger,
    SpfTable,
    factorize,
    is_rough,
    mod_inverse,
    multiplicative_values,
)
from .params import SieveParams
from .weights import (
    WeightSystem,
    build_weight_family,
    compose_systems,
    enumerate_support,
    in_linear_support,
    in_small_support,
    richert_weight,
    sandwich_check,
    well_factor_split,
)
from .theory import (
    MainTermReport,
    euler_product,
    fundamental_lemma_ratio,
    linear_sieve_pair,
    main_term_constant,
    sieve_main_term,
)
from .expsums import (
    coprime_count_check,
    fourier_coefficient,
    fourier_coefficient_exact,
    gcd_sum_check,
    kloosterman_complete,
    kloosterman_incomplete,
    weil_bound_check,
)
from .windows import SmoothWindow, smooth_window
from .variance import (
    VarianceReport,
    dispersion_bracket_probe,
    fraction_difference_check,
    variance_decomposition,
    weight_term_values,
    weighted_remainder,
)
from .experiment import (
    APWindow,
    CensusResult,
    coverage_scan,
    exceptional_measure,
    prime_census,
    squarefull_window_measure,
    trend_scan,
    window_count,
)
