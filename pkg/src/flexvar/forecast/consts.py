from typing import Final

HORIZONS: Final = (1, 3)
BENCHMARK: Final = "VAR:constant"
VAR_CLASS: Final = "VAR"
NS_VAR_CLASS: Final = "NS-VAR"

# exp(-745) is the smallest positive double
LOG_DENSITY_FLOOR: Final = -745.0

SUMMARY_QUANTILES: Final = (0.05, 0.16, 0.5, 0.84, 0.95)
