import numpy as np
from pydantic import BaseModel, ConfigDict, PositiveFloat, field_validator

from flexvar.model.errors import SpecValidationError
from flexvar.yields.consts import (
    DEFAULT_ALPHA,
    DEFAULT_MATURITIES,
    SERIES_CUTOFF,
)

FACTOR_NAMES = ("level", "slope", "curvature")


class NsConfig(BaseModel):
    """Decay rate and maturities (years) of a Nelson-Siegel curve."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    alpha: PositiveFloat = DEFAULT_ALPHA
    maturities: tuple[float, ...] = DEFAULT_MATURITIES

    @field_validator("maturities")
    @classmethod
    def check_maturities(cls, value):
        if len(value) < 3:
            raise ValueError("at least 3 maturities are needed")
        if any(m <= 0 for m in value):
            raise ValueError("maturities must be positive")
        if len(set(value)) != len(value):
            raise ValueError("maturities must be distinct")
        return tuple(float(m) for m in value)

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f"{m:g}y" for m in self.maturities)


def _decay_ratio(x: np.ndarray) -> np.ndarray:
    """(1 - exp(-x)) / x with the series expansion near zero."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < SERIES_CUTOFF
    safe = np.where(small, 1.0, x)
    return np.where(small, 1.0 - x / 2.0 + x * x / 6.0, -np.expm1(-safe) / safe)


def ns_loadings(theta, alpha: float = DEFAULT_ALPHA) -> np.ndarray:
    """
    (level, slope, curvature) loadings of maturity ``theta``; for an array of
    maturities one row per maturity.
    """
    theta = np.asarray(theta, dtype=float)
    if np.any(theta < 0) or alpha <= 0:
        raise SpecValidationError("maturities and alpha must be positive")
    x = theta * alpha
    slope = _decay_ratio(x)
    curvature = slope - np.exp(-x)
    return np.stack([np.ones_like(x), slope, curvature], axis=-1)


def loading_matrix(config: NsConfig) -> np.ndarray:
    """n_mat x 3."""
    return ns_loadings(np.array(config.maturities), config.alpha)


def extract_factors(yields: np.ndarray, config: NsConfig) -> np.ndarray:
    """
    Period-by-period OLS of the yield cross-section on the loadings.

    :param yields: T x n_mat
    :param config: NsConfig
    :return: T x 3 factors (level, slope, curvature)
    """
    yields = np.asarray(yields, dtype=float)
    if yields.ndim == 1:
        yields = yields[None, :]
    L = loading_matrix(config)
    if yields.shape[1] != L.shape[0]:
        raise SpecValidationError(
            f"{yields.shape[1]} yield columns for {L.shape[0]} maturities"
        )
    if np.linalg.matrix_rank(L) < 3:
        raise SpecValidationError("loading matrix is rank deficient")
    factors, *_ = np.linalg.lstsq(L, yields.T, rcond=None)
    return factors.T


def reconstruct_yields(factors: np.ndarray, config: NsConfig) -> np.ndarray:
    """T x n_mat fitted yields (no measurement error)."""
    return np.asarray(factors, dtype=float) @ loading_matrix(config).T
