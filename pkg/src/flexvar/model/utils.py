import numpy as np

from flexvar.model.consts import MIN_EXTRA_ROWS
from flexvar.model.core import (
    DataPanel,
    ModelSpec,
    SpecTemplate,
    ValidatedSpec,
)
from flexvar.model.errors import SpecValidationError

CONSTANT_TAG = "constant"
RANDOM_WALK_TAG = "random_walk"


def lag_matrix(
    Y: np.ndarray,
    P: int,
    intercept: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """
    Row t of X is (y'_{t-1}, ..., y'_{t-P}) (then 1 if ``intercept``), for
    t = P..T-1; Y_eff holds the aligned rows of Y.

    :param Y: T x M
    :param P: int
    :param intercept: bool
    :return: (X, Y_eff)
    """
    Y = np.asarray(Y, dtype=float)
    if Y.ndim == 1:
        Y = Y[:, None]
    T = Y.shape[0]
    if T <= P:
        raise SpecValidationError(f"need more than {P} rows to form lags")
    blocks = [Y[P - p : T - p] for p in range(1, P + 1)]
    if intercept:
        blocks.append(np.ones((T - P, 1)))
    return np.hstack(blocks), Y[P:]


def build_lag_matrix(
    panel: DataPanel,
    P: int,
    intercept: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    return lag_matrix(panel.Y, P, intercept)


def lag_vector(history: np.ndarray, P: int, intercept: bool = False):
    """x for the period after the last row of ``history`` (oldest first)."""
    lags = [history[-p] for p in range(1, P + 1)]
    if intercept:
        lags.append(np.ones(1))
    return np.concatenate(lags)


def validate_spec(spec: ModelSpec, panel: DataPanel) -> ValidatedSpec:
    """
    Check ``spec`` against ``panel`` and attach the derived dimensions.

    :param spec: ModelSpec
    :param panel: DataPanel
    :return: ValidatedSpec
    """
    if spec.M != panel.M:
        raise SpecValidationError(
            f"spec has M={spec.M} but the panel has {panel.M} series"
        )
    if spec.include_obs and spec.R_r != panel.R_r:
        raise SpecValidationError(
            f"spec expects R_r={spec.R_r} observed modifiers, "
            f"panel has {panel.R_r}"
        )
    if panel.T <= spec.P + MIN_EXTRA_ROWS:
        raise SpecValidationError(
            f"T={panel.T} too small for P={spec.P} "
            f"(need more than {spec.P + MIN_EXTRA_ROWS} rows)"
        )
    if spec.include_ms and panel.T - spec.P < 2:
        raise SpecValidationError("switching needs at least two periods")

    v = tuple(spec.v(j) for j in range(spec.M))
    return ValidatedSpec(
        spec=spec,
        T=panel.T,
        K=spec.K,
        k=spec.k,
        v=v,
        R_j=tuple(spec.R_for(j) for j in range(spec.M)),
        R=spec.R,
        N=sum(v),
    )


def spec_tag(spec: SpecTemplate) -> str:
    if spec.static:
        return CONSTANT_TAG
    if spec.random_walk:
        return RANDOM_WALK_TAG
    return f"r{int(spec.include_obs)}_d{spec.delta}_s{int(spec.include_ms)}"


def template_grid(
    P: int = 3,
    R_r: int = 1,
    random_walk: bool = False,
    **kwargs,
) -> dict[str, SpecTemplate]:
    """
    The constant VAR plus every combination of observed modifiers (on/off),
    delta in {0, 1, 2, 3} and switching (on/off) except the one with no
    modifier at all; optionally the random-walk TVP preset.

    :return: dict tag -> SpecTemplate, constant first
    """
    grid = {CONSTANT_TAG: SpecTemplate(P=P, static=True, **kwargs)}
    for include_obs in (False, True):
        for delta in range(4):
            for include_ms in (False, True):
                if not (include_obs or delta or include_ms):
                    continue
                template = SpecTemplate(
                    P=P,
                    include_obs=include_obs,
                    R_r=R_r if include_obs else 0,
                    delta=delta,
                    include_ms=include_ms,
                    **kwargs,
                )
                grid[spec_tag(template)] = template
    if random_walk:
        grid[RANDOM_WALK_TAG] = SpecTemplate(P=P, random_walk=True, **kwargs)
    return grid


def system_grid(
    M: int,
    P: int = 3,
    R_r: int = 1,
    **kwargs,
) -> dict[str, ModelSpec]:
    """``template_grid`` instantiated for an M-variable system."""
    return {
        tag: template.for_system(M)
        for tag, template in template_grid(P, R_r, **kwargs).items()
    }
