"""
Run configuration: one JSON document per invocation. Unknown keys at any
level are errors.
"""

from pathlib import Path
from typing import Literal

import simplejson as json
from pydantic import (
    BaseModel,
    ConfigDict,
    Field,
    NonNegativeInt,
    PositiveInt,
    field_validator,
    model_validator,
)

from flexvar.cli.io import MODIFIER_PREFIX
from flexvar.forecast.consts import (
    BENCHMARK,
    HORIZONS,
    NS_VAR_CLASS,
    VAR_CLASS,
)
from flexvar.model.core import McmcConfig, PriorConfig, SpecTemplate
from flexvar.model.errors import SpecValidationError
from flexvar.yields.consts import DEFAULT_ALPHA, DEFAULT_MATURITIES
from flexvar.yields.core import NsConfig


class Section(BaseModel):
    model_config = ConfigDict(frozen=True, extra="forbid")


class DataConfig(Section):
    """
    ``columns`` are the endogenous series (default: every column that is
    neither ``date`` nor prefixed ``mod_``); ``modifiers`` the observed
    effect modifiers (default: every ``mod_`` column), given with or
    without the prefix.
    """

    path: Path
    columns: tuple[str, ...] | None = None
    modifiers: tuple[str, ...] | None = None
    difference: bool = False
    lag_modifiers: bool = True

    @field_validator("modifiers")
    @classmethod
    def add_prefix(cls, value):
        if value is None:
            return value
        return tuple(
            m if m.startswith(MODIFIER_PREFIX) else MODIFIER_PREFIX + m
            for m in value
        )


class ModelConfig(Section):
    P: PositiveInt = 3
    include_obs: bool = False
    include_ms: bool = False
    delta: NonNegativeInt = 0
    random_walk: bool = False
    static: bool = False
    intercept: bool = False

    def to_template(
        self,
        R_r: int,
        priors: PriorConfig,
        mcmc: McmcConfig,
    ) -> SpecTemplate:
        return SpecTemplate(
            **self.model_dump(),
            R_r=R_r if self.include_obs else 0,
            priors=priors,
            mcmc=mcmc,
        )


class ForecastConfig(Section):
    draws: Path | None = None
    horizons: tuple[PositiveInt, ...] = HORIZONS


class EvaluationConfig(Section):
    """
    ``grid`` is "full" (constant plus the 15 modifier combinations) or a
    list of tags out of it; ``classes`` picks VAR and/or NS-VAR.
    """

    first_origin: str
    last_origin: str
    grid: Literal["full"] | tuple[str, ...] = "full"
    classes: tuple[Literal["VAR", "NS-VAR"], ...] = (VAR_CLASS,)
    benchmark: str = BENCHMARK
    random_walk: bool = False
    joint: bool = False

    @model_validator(mode="after")
    def check_benchmark(self):
        model_class, sep, _ = self.benchmark.partition(":")
        if not sep or model_class not in (VAR_CLASS, NS_VAR_CLASS):
            raise ValueError("benchmark must read '<VAR|NS-VAR>:<tag>'")
        return self


class NelsonSiegelConfig(Section):
    """Yield columns in maturity order, with their maturities in years."""

    alpha: float = Field(DEFAULT_ALPHA, gt=0)
    maturities: tuple[float, ...] = DEFAULT_MATURITIES
    columns: tuple[str, ...] | None = None

    @property
    def ns(self) -> NsConfig:
        return NsConfig(alpha=self.alpha, maturities=self.maturities)


class SimulateConfig(Section):
    M: PositiveInt = 2
    T: PositiveInt = 200
    truth: Literal["prior", "constant"] = "prior"


class RunConfig(Section):
    data: DataConfig | None = None
    model: ModelConfig = Field(default_factory=ModelConfig)
    mcmc: McmcConfig = Field(default_factory=McmcConfig)
    priors: PriorConfig = Field(default_factory=PriorConfig)
    forecast: ForecastConfig = Field(default_factory=ForecastConfig)
    evaluation: EvaluationConfig | None = None
    nelson_siegel: NelsonSiegelConfig = Field(
        default_factory=NelsonSiegelConfig
    )
    simulate: SimulateConfig = Field(default_factory=SimulateConfig)
    seed: NonNegativeInt | None = None
    threads: PositiveInt | None = None
    out: Path = Path("out")

    @property
    def effective_seed(self) -> int:
        return self.mcmc.seed if self.seed is None else self.seed

    def require_data(self) -> DataConfig:
        if self.data is None:
            raise SpecValidationError("the configuration has no data section")
        return self.data

    def with_overrides(
        self,
        seed: int | None = None,
        threads: int | None = None,
        out: Path | None = None,
    ) -> "RunConfig":
        update = {}
        if seed is not None:
            update["seed"] = seed
            update["mcmc"] = self.mcmc.model_copy(update={"seed": seed})
        if threads is not None:
            update["threads"] = threads
        if out is not None:
            update["out"] = Path(out)
        return self.model_copy(update=update)


def load_config(path: Path | str | None) -> RunConfig:
    """
    Parse a JSON configuration file. Relative data paths are resolved
    against the file's directory.

    :raises SpecValidationError: unreadable or malformed JSON
    :raises pydantic.ValidationError: unknown keys or invalid values
    """
    if path is None:
        return RunConfig()
    path = Path(path)
    try:
        payload = json.loads(path.read_text())
    except FileNotFoundError as exc:
        raise SpecValidationError(f"config file {path} not found") from exc
    except json.JSONDecodeError as exc:
        raise SpecValidationError(
            f"{path}: {exc.msg}", line=exc.lineno
        ) from exc
    if not isinstance(payload, dict):
        raise SpecValidationError(f"{path}: top level must be an object")

    config = RunConfig.model_validate(payload)
    updates = {}
    if config.data is not None and not config.data.path.is_absolute():
        updates["data"] = config.data.model_copy(
            update={"path": path.parent / config.data.path}
        )
    draws = config.forecast.draws
    if draws is not None and not draws.is_absolute():
        updates["forecast"] = config.forecast.model_copy(
            update={"draws": path.parent / draws}
        )
    return config.model_copy(update=updates) if updates else config
