"""Streaming inference for sampling without replacement from a finite
population: confidence sequences, anytime-valid p-values, e-values and
stopping rules, plus a simulation harness, CLI and monitoring service.
"""

from ._backend import BACKEND_NAME
from .bounded import (
    BoundedCsState,
    ConfidenceInterval,
    LambdaSchedule,
    advantage,
    bm_cs,
    bm_halfwidth,
    eb_ci,
    hoeffding_ci,
    next_lambda,
    psi_e,
    psi_h,
    wor_mean_trace,
)
from .engines import Engine, EngineConfig
from .errors import (
    DomainError,
    EnumerationCapError,
    IntegrityError,
    ScheduleError,
    StateError,
    ValidationError,
    WorcsError,
)
from .inference import (
    NullHypothesis,
    StopDecision,
    StoppingPolicy,
    anytime_p_count,
    anytime_p_generic,
    anytime_p_mean,
    e_value,
    evaluate_stop,
)
from .population import (
    ObservationStream,
    PopulationSpec,
    draw_stream,
    draw_stream_batch,
    enumerate_orderings,
    load_population,
    split_seeds,
)
from .ppr import (
    DirMultPprState,
    DmConfidenceSet,
    PprState,
    coupled_prior,
    log_beta_binomial_pmf,
)
from .snapshots import CsSnapshot

__version__ = "0.1.0"

__all__ = [
    "BACKEND_NAME",
    "BoundedCsState",
    "ConfidenceInterval",
    "CsSnapshot",
    "DirMultPprState",
    "DmConfidenceSet",
    "DomainError",
    "Engine",
    "EngineConfig",
    "EnumerationCapError",
    "IntegrityError",
    "LambdaSchedule",
    "NullHypothesis",
    "ObservationStream",
    "PopulationSpec",
    "PprState",
    "ScheduleError",
    "StateError",
    "StopDecision",
    "StoppingPolicy",
    "ValidationError",
    "WorcsError",
    "advantage",
    "anytime_p_count",
    "anytime_p_generic",
    "anytime_p_mean",
    "bm_cs",
    "bm_halfwidth",
    "coupled_prior",
    "draw_stream",
    "draw_stream_batch",
    "e_value",
    "eb_ci",
    "enumerate_orderings",
    "evaluate_stop",
    "hoeffding_ci",
    "load_population",
    "log_beta_binomial_pmf",
    "next_lambda",
    "psi_e",
    "psi_h",
    "split_seeds",
    "wor_mean_trace",
]
