from flexvar.forecast.core import (
    Predictive,
    difference_levels,
    simulate_predictive,
    to_targets,
)
from flexvar.forecast.evaluation import (
    EvaluationResult,
    ForecastRecord,
    ModelClass,
    forecast_origin,
    recursive_evaluate,
    records_frame,
    score_table,
)
from flexvar.forecast.scoring import (
    log_predictive_density,
    score_lpbf,
    score_rmse,
)

__all__ = [
    "EvaluationResult",
    "ForecastRecord",
    "ModelClass",
    "Predictive",
    "difference_levels",
    "forecast_origin",
    "log_predictive_density",
    "recursive_evaluate",
    "records_frame",
    "score_lpbf",
    "score_rmse",
    "score_table",
    "simulate_predictive",
    "to_targets",
]
