from flexvar.shrinkage.core import (
    HorseshoeState,
    prior_variance_for,
    update_horseshoe,
)
