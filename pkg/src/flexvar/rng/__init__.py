from flexvar.rng.core import RngStream
from flexvar.rng.dists import (
    sample_beta,
    sample_gaussian_regression,
    sample_gig,
    sample_inverse_gamma,
)
