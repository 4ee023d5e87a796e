from typing import Final

# 12 x 0.0609, monthly decay expressed per year of maturity
DEFAULT_ALPHA: Final = 0.7308
DEFAULT_MATURITIES: Final = (1.0, 3.0, 5.0, 7.0, 10.0, 15.0)

# below this theta * alpha the slope loading uses its Taylor expansion
SERIES_CUTOFF: Final = 1e-8
