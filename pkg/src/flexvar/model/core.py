from dataclasses import dataclass, field
from typing import Any

import numpy as np
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveFloat,
    PositiveInt,
    model_validator,
)

from flexvar.model.consts import (
    SV_MU_PRIOR_VAR,
    SV_PSI_PRIOR,
    SV_SIGMA2_PRIOR,
    TRANSITION_PRIOR,
)
from flexvar.model.errors import SpecValidationError
from flexvar.shrinkage.core import HorseshoeState


class PriorConfig(BaseModel):
    """Prior hyperparameters; defaults are the values of the application."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    sv_mu_var: PositiveFloat = SV_MU_PRIOR_VAR
    sv_psi_a: PositiveFloat = SV_PSI_PRIOR[0]
    sv_psi_b: PositiveFloat = SV_PSI_PRIOR[1]
    sv_sigma2_shape: PositiveFloat = SV_SIGMA2_PRIOR[0]
    sv_sigma2_rate: PositiveFloat = SV_SIGMA2_PRIOR[1]
    e00: PositiveFloat = TRANSITION_PRIOR[0][0]
    e01: PositiveFloat = TRANSITION_PRIOR[0][1]
    e10: PositiveFloat = TRANSITION_PRIOR[1][0]
    e11: PositiveFloat = TRANSITION_PRIOR[1][1]

    @property
    def transition(self) -> np.ndarray:
        """2x2 array ``e[i, l]`` of Beta shapes for the transition rows."""
        return np.array([[self.e00, self.e01], [self.e10, self.e11]])


class McmcConfig(BaseModel):
    """``draws`` counts all sweeps, burn-in included."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    draws: PositiveInt = 15000
    burn: NonNegativeInt = 5000
    thin: PositiveInt = 1
    seed: NonNegativeInt = 0
    log_every: PositiveInt = 500

    @model_validator(mode="after")
    def check_counts(self):
        if self.burn >= self.draws:
            raise ValueError("burn must be smaller than draws")
        if (self.draws - self.burn) % self.thin:
            raise ValueError("draws - burn must be a multiple of thin")
        return self

    @property
    def n_stored(self) -> int:
        return (self.draws - self.burn) // self.thin


class SpecTemplate(BaseModel):
    """Everything in a model specification except the system size M."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    P: PositiveInt = 3
    include_obs: bool = False
    R_r: NonNegativeInt = 0
    include_ms: bool = False
    delta: NonNegativeInt = 0
    random_walk: bool = False
    static: bool = False
    intercept: bool = False
    priors: PriorConfig = Field(default_factory=PriorConfig)
    mcmc: McmcConfig = Field(default_factory=McmcConfig)

    @model_validator(mode="after")
    def check_flags(self):
        if self.include_obs and self.R_r < 1:
            raise ValueError("include_obs requires R_r >= 1")
        if not self.include_obs and self.R_r:
            raise ValueError("R_r must be 0 when include_obs is off")
        plain = not (self.include_obs or self.include_ms or self.delta)
        if self.static and not (plain and not self.random_walk):
            raise ValueError("a static specification admits no modifiers")
        if self.random_walk and not plain:
            raise ValueError(
                "the random-walk preset excludes r_t, S_t and delta"
            )
        return self

    def for_system(self, M: int) -> "ModelSpec":
        data = self.model_dump()
        data["M"] = M
        return ModelSpec(**data)

    def template(self) -> "SpecTemplate":
        return SpecTemplate(**self.model_dump(exclude={"M"}))


class ModelSpec(SpecTemplate):
    """
    Full model configuration. Equation indices ``j`` are zero-based, so
    ``v(j) = K + j`` is the width of equation ``j``'s regressor vector.
    """

    M: PositiveInt

    @classmethod
    def constant(cls, M: int, P: int = 3, **kwargs) -> "ModelSpec":
        """Constant-parameter VAR with SV (Lambda empty, omega fixed at 0)."""
        return cls(M=M, P=P, static=True, **kwargs)

    @classmethod
    def random_walk_tvp(cls, M: int, P: int = 3, **kwargs) -> "ModelSpec":
        """Independent random-walk TVPs: one factor per coefficient."""
        return cls(M=M, P=P, random_walk=True, **kwargs)

    @property
    def K(self) -> int:
        return self.M * self.P + int(self.intercept)

    @property
    def k(self) -> int:
        return self.M * self.K

    @property
    def R_S(self) -> int:
        return self.M * int(self.include_ms)

    @property
    def R_tau(self) -> int:
        return sum(self.delta_for(j) for j in range(self.M))

    @property
    def R(self) -> int:
        return self.R_r * int(self.include_obs) + self.R_S + self.R_tau

    @property
    def N(self) -> int:
        return sum(self.v(j) for j in range(self.M))

    def v(self, j: int) -> int:
        return self.K + j

    def delta_for(self, j: int) -> int:
        return self.v(j) if self.random_walk else self.delta

    def R_for(self, j: int) -> int:
        """Number of effect modifiers entering equation ``j``."""
        return (
            self.R_r * int(self.include_obs)
            + int(self.include_ms)
            + self.delta_for(j)
        )

    def modifier_slices(self, j: int) -> dict[str, slice]:
        """Column ranges of r, S and tau inside ``z_jt``."""
        r = self.R_r * int(self.include_obs)
        s = int(self.include_ms)
        return {
            "r": slice(0, r),
            "S": slice(r, r + s),
            "tau": slice(r + s, r + s + self.delta_for(j)),
        }

    def loading_mask(self, j: int) -> np.ndarray:
        """
        Boolean v_j x R_j pattern of the sampled entries of Lambda_j; all
        other entries are zero. The random-walk preset loads factor ``i``
        on coefficient ``i`` only.
        """
        v, R = self.v(j), self.R_for(j)
        if self.random_walk:
            return np.eye(v, R, dtype=bool)
        return np.ones((v, R), dtype=bool)

    def loading_index(self, j: int) -> tuple[np.ndarray, np.ndarray]:
        """(row, column) of the sampled entries of Lambda_j, column-major."""
        cols, rows = np.nonzero(self.loading_mask(j).T)
        return rows, cols


@dataclass(frozen=True)
class DataPanel:
    """
    Observed system. ``R_obs`` row ``t`` holds the modifiers already lagged one
    period; ``R_next`` optionally holds the last unlagged modifier values
    (the ones entering ``z`` at ``T + 1``).
    """

    dates: np.ndarray
    Y: np.ndarray
    R_obs: np.ndarray | None = None
    labels: tuple[str, ...] = ()
    modifier_labels: tuple[str, ...] = ()
    R_next: np.ndarray | None = None

    def __post_init__(self):
        Y = np.asarray(self.Y, dtype=float)
        if Y.ndim == 1:
            Y = Y[:, None]
        if Y.ndim != 2 or Y.shape[1] < 1:
            raise SpecValidationError("Y must be a T x M matrix with M >= 1")
        if not np.all(np.isfinite(Y)):
            row = int(np.argwhere(~np.isfinite(Y))[0, 0])
            raise SpecValidationError(f"Y has a missing value in row {row}")

        dates = np.asarray(self.dates)
        if dates.shape[0] != Y.shape[0]:
            raise SpecValidationError("dates and Y row counts differ")
        if dates.shape[0] > 1 and not np.all(dates[1:] > dates[:-1]):
            raise SpecValidationError("dates must be strictly increasing")

        R_obs = self.R_obs
        if R_obs is not None:
            R_obs = np.asarray(R_obs, dtype=float)
            if R_obs.ndim == 1:
                R_obs = R_obs[:, None]
            if R_obs.shape[0] != Y.shape[0]:
                raise SpecValidationError("R_obs and Y row counts differ")
            if not np.all(np.isfinite(R_obs)):
                row = int(np.argwhere(~np.isfinite(R_obs))[0, 0])
                raise SpecValidationError(
                    f"R_obs has a missing value in row {row}"
                )
            if R_obs.shape[1] == 0:
                R_obs = None

        labels = tuple(self.labels) or tuple(
            f"y{i + 1}" for i in range(Y.shape[1])
        )
        if len(labels) != Y.shape[1]:
            raise SpecValidationError("one label per column of Y expected")
        mod_labels = tuple(self.modifier_labels)
        if R_obs is not None and not mod_labels:
            mod_labels = tuple(f"r{i + 1}" for i in range(R_obs.shape[1]))

        R_next = self.R_next
        if R_next is not None:
            R_next = np.asarray(R_next, dtype=float).reshape(-1)

        object.__setattr__(self, "Y", Y)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "R_obs", R_obs)
        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "modifier_labels", mod_labels)
        object.__setattr__(self, "R_next", R_next)

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def M(self) -> int:
        return self.Y.shape[1]

    @property
    def R_r(self) -> int:
        return 0 if self.R_obs is None else self.R_obs.shape[1]

    def head(self, rows: int) -> "DataPanel":
        """
        The first ``rows`` observations (used by recursive estimation). The
        lagged modifier row ``rows`` is the unlagged value at the cut, so it
        becomes ``R_next``.
        """
        R_obs, R_next = None, None
        if self.R_obs is not None:
            R_obs = self.R_obs[:rows]
            R_next = self.R_obs[rows] if rows < self.T else self.R_next
        return DataPanel(
            dates=self.dates[:rows],
            Y=self.Y[:rows],
            R_obs=R_obs,
            labels=self.labels,
            modifier_labels=self.modifier_labels,
            R_next=R_next,
        )


@dataclass(frozen=True)
class ValidatedSpec:
    """A specification checked against a panel, with derived dimensions."""

    spec: ModelSpec
    T: int
    K: int
    k: int
    v: tuple[int, ...]
    R_j: tuple[int, ...]
    R: int
    N: int

    @property
    def T_eff(self) -> int:
        return self.T - self.spec.P


@dataclass
class SvParams:
    mu: float = 0.0
    psi: float = 0.5
    sigma2: float = 0.1

    def as_array(self) -> np.ndarray:
        return np.array([self.mu, self.psi, self.sigma2])


@dataclass
class EquationState:
    """All latent quantities of equation ``j`` for one sweep."""

    j: int
    gamma: np.ndarray
    Lambda: np.ndarray
    omega: np.ndarray
    tau: np.ndarray
    S: np.ndarray
    P: np.ndarray
    h: np.ndarray
    sv: SvParams
    hs: dict[str, HorseshoeState]
    gamma_tilde: np.ndarray
    eta: np.ndarray

    @property
    def v(self) -> int:
        return self.gamma.shape[0]

    def check(self):
        if np.any(self.omega < 0):
            raise SpecValidationError(f"omega_{self.j} has negative entries")
        if not np.allclose(self.P.sum(axis=1), 1.0):
            raise SpecValidationError(f"P_{self.j} rows must sum to one")
        if not (abs(self.sv.psi) < 1 and self.sv.sigma2 > 0):
            raise SpecValidationError(f"SV parameters of {self.j} invalid")


@dataclass
class PosteriorDraws:
    """
    Thinned draws. ``arrays`` maps ``f"{name}_{j}"`` to arrays whose first
    axis runs over stored sweeps.
    """

    spec: ModelSpec
    dates: np.ndarray
    labels: tuple[str, ...]
    arrays: dict[str, np.ndarray] = field(default_factory=dict)
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def n_stored(self) -> int:
        return self.arrays["gamma_0"].shape[0] if self.arrays else 0

    @property
    def T_eff(self) -> int:
        return self.arrays["h_0"].shape[1]

    def get(self, name: str, j: int) -> np.ndarray:
        return self.arrays[f"{name}_{j}"]

    def coefficient_paths(self, j: int) -> np.ndarray:
        """gamma_j + gamma_tilde_jt, shape (draws, T_eff, v_j)."""
        return self.get("gamma", j)[:, None, :] + self.get("gamma_tilde", j)

    def modifiers(self, j: int, R_obs: np.ndarray | None = None) -> np.ndarray:
        """z_jt per draw, shape (draws, T_eff, R_j)."""
        n, T = self.n_stored, self.T_eff
        parts = []
        if self.spec.include_obs:
            if R_obs is None:
                raise SpecValidationError("observed modifiers required")
            parts.append(np.broadcast_to(R_obs, (n, *R_obs.shape)))
        if self.spec.include_ms:
            parts.append(self.get("S", j)[:, :, None].astype(float))
        parts.append(self.get("tau", j))
        if not parts:
            return np.zeros((n, T, 0))
        return np.concatenate(parts, axis=2)

    def truncate(self, n: int) -> "PosteriorDraws":
        return PosteriorDraws(
            spec=self.spec,
            dates=self.dates,
            labels=self.labels,
            arrays={k: v[:n] for k, v in self.arrays.items()},
            metadata=dict(self.metadata),
        )
