from collections.abc import Mapping
from dataclasses import dataclass

import numpy as np

from flexvar.model.errors import SpecValidationError
from flexvar.rng.dists import sample_inverse_gamma
from flexvar.shrinkage.consts import SCALE_CAP, SCALE_FLOOR, SHRINKAGE_BLOCKS
from flexvar.shrinkage.utils import (
    global_aux_params,
    global_scale_params,
    local_aux_params,
    local_scale_params,
)


@dataclass
class HorseshoeState:
    """
    Horseshoe scales of one shrunk block. ``groups[i]`` is the group (global
    scale) of coefficient ``i``; element-level arrays have the length of the
    block, group-level arrays the number of groups.
    """

    c2: np.ndarray
    d2: np.ndarray
    e: np.ndarray
    f: np.ndarray
    groups: np.ndarray

    @classmethod
    def init(cls, groups) -> "HorseshoeState":
        groups = np.asarray(groups, dtype=np.int64).reshape(-1)
        n_groups = int(groups.max()) + 1 if groups.size else 0
        return cls(
            c2=np.ones(groups.size),
            d2=np.ones(n_groups),
            e=np.ones(groups.size),
            f=np.ones(n_groups),
            groups=groups,
        )

    @classmethod
    def single_group(cls, n: int) -> "HorseshoeState":
        return cls.init(np.zeros(n, dtype=np.int64))

    @classmethod
    def column_groups(cls, rows: int, cols: int) -> "HorseshoeState":
        """One group per column of a ``rows x cols`` matrix, vec order."""
        return cls.init(np.repeat(np.arange(cols), rows))

    @property
    def size(self) -> int:
        return self.groups.size

    @property
    def n_groups(self) -> int:
        return self.d2.size

    def prior_variance(self) -> np.ndarray:
        return self.c2 * self.d2[self.groups]

    def check(self):
        if self.groups.size and not np.array_equal(
            np.unique(self.groups), np.arange(self.n_groups)
        ):
            raise SpecValidationError("horseshoe groups must cover 0..G-1")
        for name in ("c2", "d2", "e", "f"):
            value = getattr(self, name)
            if not (np.all(np.isfinite(value)) and np.all(value > 0)):
                raise SpecValidationError(f"horseshoe {name} must be positive")

    def copy(self) -> "HorseshoeState":
        return HorseshoeState(
            self.c2.copy(),
            self.d2.copy(),
            self.e.copy(),
            self.f.copy(),
            self.groups,
        )


def _draw(params, rng):
    return np.clip(sample_inverse_gamma(*params, rng), SCALE_FLOOR, SCALE_CAP)


def update_horseshoe(
    b: np.ndarray,
    state: HorseshoeState,
    rng: np.random.Generator,
) -> HorseshoeState:
    """
    One pass over the auxiliary inverse-Gamma conditionals, in the order
    local scales, global scales, local auxiliaries, global auxiliaries.

    :param b: coefficients of the block (same length as ``state.groups``)
    :param state: HorseshoeState
    :param rng: np.random.Generator
    :return: HorseshoeState
    """
    b = np.asarray(b, dtype=float).reshape(-1)
    if b.size != state.size:
        raise SpecValidationError("coefficient count does not match groups")
    if not state.size:
        return state

    b2 = b * b
    c2 = _draw(local_scale_params(b2, state.e, state.d2[state.groups]), rng)
    d2 = _draw(
        global_scale_params(b2, c2, state.f, state.groups, state.n_groups),
        rng,
    )
    e = _draw(local_aux_params(c2), rng)
    f = _draw(global_aux_params(d2), rng)
    return HorseshoeState(c2=c2, d2=d2, e=e, f=f, groups=state.groups)


def prior_variance_for(
    block: str,
    hs: Mapping[str, HorseshoeState],
) -> np.ndarray:
    """Per-coefficient prior variances c_i^2 d_g^2 of a named block."""
    if block not in SHRINKAGE_BLOCKS:
        raise SpecValidationError(f"unknown shrinkage block {block!r}")
    return hs[block].prior_variance()
