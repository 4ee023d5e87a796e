from flexvar.gibbs.core import GibbsSampler, SweepState, run_chain
from flexvar.gibbs.utils import build_equation_regressors, normalize_modifiers
