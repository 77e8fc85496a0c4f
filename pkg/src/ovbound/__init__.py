"""Bounds on treatment effects under omitted-variable bias.

The bias of the controlled OLS estimate solves a cubic whose coefficients
depend on observable regression statistics plus two sensitivity
parameters: the proportional-selection ratio ``delta`` and the R-squared
``R_max`` of a hypothetical long regression.  This package solves that
cubic across a (delta, R_max) box, selects a root per cell by continuity,
and summarises the resulting distribution of bias-adjusted effects.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ComputationError,
    DomainError,
    InputError,
    OvboundError,
)
from .model_inputs import (  # noqa: E402
    Dataset,
    DgpSpec,
    RegressionSummary,
    population_truth,
    read_csv,
    simulate_dgp,
    summarize,
)
from .grid import BoundedBox, run  # noqa: E402
from .bate import distribution  # noqa: E402
from .delta_star import profile as delta_star_profile  # noqa: E402
from .identified_sets import identified_sets as equal_selection_sets  # noqa: E402

__all__ = [
    "BoundedBox",
    "ComputationError",
    "Dataset",
    "DgpSpec",
    "DomainError",
    "InputError",
    "OvboundError",
    "RegressionSummary",
    "delta_star_profile",
    "distribution",
    "equal_selection_sets",
    "population_truth",
    "read_csv",
    "run",
    "simulate_dgp",
    "summarize",
]
