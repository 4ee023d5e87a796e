from typing import Final

# minimum number of rows beyond the lag order
MIN_EXTRA_ROWS: Final = 10

# Beta(5, 1.5) on (psi + 1) / 2, N(0, 10^2) on mu, Gamma(1/2, 1/2) on varsigma^2
SV_MU_PRIOR_VAR: Final = 100.0
SV_PSI_PRIOR: Final = (5.0, 1.5)
SV_SIGMA2_PRIOR: Final = (0.5, 0.5)

# e00 = e11 = 10, e01 = e10 = 1
TRANSITION_PRIOR: Final = ((10.0, 1.0), (1.0, 10.0))

DRAWS_FORMAT_VERSION: Final = 1
MANIFEST_NAME: Final = "manifest.json"

# metadata entry left out of draw manifests (varies run to run)
TIMINGS_KEY: Final = "timings"
