from typing import Final

SHRINKAGE_BLOCKS: Final = ("loadings", "constants", "sqrt_omega")

# scales and auxiliaries are kept inside [SCALE_FLOOR, SCALE_CAP]
SCALE_FLOOR: Final = 1e-12
SCALE_CAP: Final = 1e12
