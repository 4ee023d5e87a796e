from flexvar.yields.core import (
    FACTOR_NAMES,
    NsConfig,
    extract_factors,
    loading_matrix,
    ns_loadings,
    reconstruct_yields,
)
