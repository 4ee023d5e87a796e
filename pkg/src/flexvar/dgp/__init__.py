from flexvar.dgp.core import (
    EquationTruth,
    TruthRecord,
    complete_paths,
    draw_prior_truth,
    generate_observations,
    simulate_dgp,
    simulate_modifiers,
)
from flexvar.dgp.geweke import GewekeResult, functional_names, geweke_test

__all__ = [
    "EquationTruth",
    "GewekeResult",
    "TruthRecord",
    "complete_paths",
    "draw_prior_truth",
    "functional_names",
    "generate_observations",
    "geweke_test",
    "simulate_dgp",
    "simulate_modifiers",
]
