from flexvar.longrun.core import (
    CompanionSystem,
    LongrunSummary,
    companion_form,
    longrun_measure,
    longrun_paths,
    spectral_density_zero,
)
