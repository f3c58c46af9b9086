"""Representation functions of random sets with prescribed growth."""

from .asymptotics import (
    ClosedForm,
    beta_sum,
    expected_r_closed_form,
    mt1_constant,
    mt3_constant,
    mt3_measure,
    mt12_profile,
    power_sum,
)
from .counting import (
    CountProfile,
    ExpectationProfile,
    count_profile,
    derivative_expectation_bound,
    expected_delta_small,
    expected_profile,
)
from .enumeration import (
    decompose_counts,
    derived_equations,
    dyadic_box_count,
    enumerate_solutions,
    max_disjoint_family,
    r_star,
    split_delta,
)
from .errors import AssertionFailure, BudgetExceeded, ConfigError, OutOfRange, RepfnError
from .experiments import (
    ExperimentConfig,
    delta_correlation,
    raikov_stohr_check,
    run_concentration,
    run_zero_density,
    tail_probability_bound,
)
from .kernels import BACKEND
from .model import Equation, GrowthSpec, MeasureSpec, validate_orpi
from .report import VERSION as __version__
from .sampler import SampledSet, counting_function, counting_law_report, sample_set
