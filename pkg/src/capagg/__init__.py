"""Coherent aggregation of probability forecasts by cyclic projection onto local coherence polytopes."""

__version__ = "0.1.0"

from .config import RunConfig, Tolerances, TOL
from .engine import (
    AggregationReport, Forecast, PooledForecastSet, SubsetDesign, aggregate,
    design_subsets, linear_average, pool, schedule_parallel,
)
from .events import (
    canonical_key, enumerate_support_assignments, evaluate, parse_event, to_text,
)
from .polytope import (
    VertexPolytope, build_polytope, global_cap_oracle, is_coherent, project_onto,
    project_onto_dykstra,
)
from .scoring import ScoreReport, brier, brier_mean, evaluate_cases, slope
