from flexvar.model.core import (
    DataPanel,
    EquationState,
    McmcConfig,
    ModelSpec,
    PosteriorDraws,
    PriorConfig,
    SpecTemplate,
    SvParams,
    ValidatedSpec,
)
from flexvar.model.errors import *
from flexvar.model.utils import (
    build_lag_matrix,
    system_grid,
    template_grid,
    validate_spec,
)
