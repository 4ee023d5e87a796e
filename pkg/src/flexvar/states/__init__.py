from flexvar.states.ffbs import FfbsProblem, ffbs_sample
from flexvar.states.markov import (
    SwitchProblem,
    kim_sample_path,
    update_transition_probs,
)
from flexvar.states.sv import SvProblem, sample_sv_block
