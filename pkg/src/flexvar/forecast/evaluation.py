"""
Recursive out-of-sample evaluation: re-estimate every specification of every
model class on an expanding window, forecast, and score against the
benchmark in a common target space.
"""

from dataclasses import dataclass, field
from functools import partial
from typing import Sequence

import numpy as np
import pandas as pd
from loguru import logger

from flexvar.forecast.consts import BENCHMARK, HORIZONS
from flexvar.forecast.core import simulate_predictive, to_targets
from flexvar.forecast.scoring import (
    log_predictive_density,
    score_lpbf,
    score_rmse,
)
from flexvar.gibbs import run_chain
from flexvar.model.consts import MIN_EXTRA_ROWS
from flexvar.model.core import DataPanel, SpecTemplate
from flexvar.model.errors import NumericalError, SpecValidationError
from flexvar.model.utils import validate_spec
from flexvar.rng import RngStream
from flexvar.utils import run_in_threads


@dataclass
class ModelClass:
    """
    One way of modelling the targets. ``panel`` is in model units; row t of
    ``realized`` holds the targets observed in the period of panel row t.
    ``target_map`` (n_targets x M) maps model variables to targets and
    ``levels`` is set when ``panel.Y`` holds first differences of it.
    """

    name: str
    panel: DataPanel
    realized: np.ndarray
    target_labels: tuple[str, ...] = ()
    target_map: np.ndarray | None = None
    levels: np.ndarray | None = None

    def __post_init__(self):
        realized = np.asarray(self.realized, dtype=float)
        if realized.ndim == 1:
            realized = realized[:, None]
        if realized.shape[0] != self.panel.T:
            raise SpecValidationError(
                f"{self.name}: realized targets and panel rows differ"
            )
        n_targets = realized.shape[1]
        if self.target_map is not None:
            self.target_map = np.asarray(self.target_map, dtype=float)
            if self.target_map.shape != (n_targets, self.panel.M):
                raise SpecValidationError(
                    f"{self.name}: target map must be "
                    f"{n_targets} x {self.panel.M}"
                )
        elif n_targets != self.panel.M:
            raise SpecValidationError(
                f"{self.name}: without a target map the targets are the "
                f"{self.panel.M} model variables"
            )
        if self.levels is not None:
            self.levels = np.asarray(self.levels, dtype=float)
            if self.levels.shape != self.panel.Y.shape:
                raise SpecValidationError(
                    f"{self.name}: levels must align with the panel"
                )
        self.realized = realized
        self.target_labels = tuple(self.target_labels) or tuple(
            f"target{i + 1}" for i in range(n_targets)
        )

    def level_base(self, rows: int) -> np.ndarray | None:
        return None if self.levels is None else self.levels[rows - 1]


@dataclass
class ForecastRecord:
    """
    Forecast of one specification from one origin at one horizon, in target
    space. ``failed`` marks an origin whose chain broke down; its numbers
    are NaN.
    """

    model_class: str
    spec_tag: str
    origin: object
    horizon: int
    target_labels: tuple[str, ...]
    point: np.ndarray
    realized: np.ndarray | None
    log_score: np.ndarray
    joint_log_score: float = np.nan
    failed: bool = False
    draws: np.ndarray | None = field(default=None, repr=False)

    @property
    def model(self) -> str:
        return f"{self.model_class}:{self.spec_tag}"

    def to_rows(self) -> list[dict]:
        rows = []
        for i, label in enumerate(self.target_labels):
            rows.append(
                {
                    "model": self.model,
                    "model_class": self.model_class,
                    "spec": self.spec_tag,
                    "origin": str(self.origin),
                    "horizon": self.horizon,
                    "target": label,
                    "point": self.point[i],
                    "realized": (
                        np.nan if self.realized is None else self.realized[i]
                    ),
                    "log_score": self.log_score[i],
                    "joint_log_score": self.joint_log_score,
                    "failed": self.failed,
                }
            )
        return rows


def forecast_origin(
    template: SpecTemplate,
    tag: str,
    model_class: ModelClass,
    rows: int,
    stream: RngStream,
    horizons: Sequence[int] = HORIZONS,
    keep_draws: bool = False,
) -> list[ForecastRecord]:
    """
    Estimate ``template`` on the first ``rows`` observations and forecast
    the targets ``horizons`` periods ahead.

    :return: one ForecastRecord per horizon
    """
    panel = model_class.panel
    train = panel.head(rows)
    spec = template.for_system(panel.M)
    validate_spec(spec, train)
    draws = run_chain(spec, train, stream.spawn("chain"))
    pred = simulate_predictive(
        draws,
        train.Y,
        max(horizons),
        stream.generator("predictive"),
        R_next=train.R_next,
    )
    targets = to_targets(
        pred, model_class.target_map, model_class.level_base(rows)
    )

    records = []
    for h in horizons:
        row = rows + h - 1
        realized = model_class.realized[row] if row < panel.T else None
        step = h - 1
        n_targets = len(model_class.target_labels)
        log_score = np.full(n_targets, np.nan)
        joint_score = np.nan
        if realized is not None:
            means, covs = targets.means[:, step], targets.covs[:, step]
            log_score = log_predictive_density(means, covs, realized)
            joint_score = log_predictive_density(
                means, covs, realized, joint=True
            )
        records.append(
            ForecastRecord(
                model_class=model_class.name,
                spec_tag=tag,
                origin=panel.dates[rows - 1],
                horizon=h,
                target_labels=model_class.target_labels,
                point=targets.draws[:, step].mean(axis=0),
                realized=realized,
                log_score=log_score,
                joint_log_score=joint_score,
                draws=targets.draws[:, step] if keep_draws else None,
            )
        )
    return records


def _failed_records(
    tag: str,
    model_class: ModelClass,
    rows: int,
    horizons: Sequence[int],
) -> list[ForecastRecord]:
    n_targets = len(model_class.target_labels)
    blank = np.full(n_targets, np.nan)
    return [
        ForecastRecord(
            model_class=model_class.name,
            spec_tag=tag,
            origin=model_class.panel.dates[rows - 1],
            horizon=h,
            target_labels=model_class.target_labels,
            point=blank.copy(),
            realized=None,
            log_score=blank.copy(),
            failed=True,
        )
        for h in horizons
    ]


def _origin_job(
    template: SpecTemplate,
    tag: str,
    model_class: ModelClass,
    rows: int,
    stream: RngStream,
    horizons: Sequence[int],
) -> list[ForecastRecord]:
    origin = model_class.panel.dates[rows - 1]
    logger.info(f"{model_class.name}:{tag} origin {origin}")
    try:
        return forecast_origin(
            template, tag, model_class, rows, stream, horizons
        )
    except NumericalError as exc:
        logger.warning(
            f"{model_class.name}:{tag} origin {origin} skipped: {exc}"
        )
        return _failed_records(tag, model_class, rows, horizons)


def origin_rows(panel: DataPanel, first, last) -> list[int]:
    """Training-sample sizes for origins dated first..last (inclusive)."""
    dates = pd.Index(panel.dates)
    mask = np.asarray((dates >= first) & (dates <= last))
    rows = [int(i) + 1 for i in np.flatnonzero(mask)]
    if not rows:
        raise SpecValidationError(f"no origins between {first} and {last}")
    return rows


def records_frame(records: Sequence[ForecastRecord]) -> pd.DataFrame:
    return pd.DataFrame([row for rec in records for row in rec.to_rows()])


def score_table(
    frame: pd.DataFrame,
    benchmark: str = BENCHMARK,
    joint: bool = False,
) -> pd.DataFrame:
    """
    RMSE ratios and average log predictive Bayes factors of every model
    against ``benchmark``, over the origins both have scored.

    :param frame: ``records_frame`` output (or the persisted records CSV)
    :param benchmark: "class:spec" of the benchmark row
    :param joint: add the joint log score column per horizon
    :return: DataFrame indexed by model
    """
    if benchmark not in set(frame["model"]):
        raise SpecValidationError(f"benchmark {benchmark} was not evaluated")
    frame = frame.assign(origin=frame["origin"].astype(str))
    models = list(dict.fromkeys(frame["model"]))
    horizons = sorted(frame["horizon"].unique())
    targets = list(dict.fromkeys(frame["target"]))
    keys = ["origin", "horizon", "target"]
    bench = frame[frame["model"] == benchmark].set_index(keys)

    table = {}
    for model in models:
        own = frame[frame["model"] == model].set_index(keys)
        both = own.join(bench, how="inner", rsuffix="_bench")
        usable = both[
            ~both["failed"].astype(bool)
            & ~both["failed_bench"].astype(bool)
            & np.isfinite(both["realized"])
        ]
        failed = own[own["failed"].astype(bool)]
        row = {"gaps": failed.index.get_level_values("origin").nunique()}
        for h in horizons:
            at_h = usable[usable.index.get_level_values("horizon") == h]
            at_target = at_h.index.get_level_values("target")
            for target in targets:
                cell = at_h[at_target == target]
                row[f"rmse_{target}_h{h}"] = _rmse_ratio(cell)
                row[f"lpbf_{target}_h{h}"] = (
                    score_lpbf(cell["log_score"], cell["log_score_bench"])
                    if len(cell)
                    else np.nan
                )
            if joint:
                first = at_h[at_target == targets[0]]
                row[f"lpbf_joint_h{h}"] = (
                    score_lpbf(
                        first["joint_log_score"],
                        first["joint_log_score_bench"],
                    )
                    if len(first)
                    else np.nan
                )
        table[model] = row
    out = pd.DataFrame.from_dict(table, orient="index")
    out.index.name = "model"
    return out


def _rmse_ratio(cell: pd.DataFrame) -> float:
    if not len(cell):
        return np.nan
    own = score_rmse(cell["point"], cell["realized"])
    bench = score_rmse(cell["point_bench"], cell["realized"])
    return own / bench if bench > 0 else np.nan


@dataclass
class EvaluationResult:
    table: pd.DataFrame
    records: list[ForecastRecord]

    @property
    def gaps(self) -> list[tuple[str, object]]:
        return sorted(
            {(rec.model, rec.origin) for rec in self.records if rec.failed},
            key=str,
        )


def recursive_evaluate(
    grid: dict[str, SpecTemplate],
    classes: Sequence[ModelClass],
    first_origin,
    last_origin,
    horizons: Sequence[int] = HORIZONS,
    seed: int = 0,
    threads: int = 1,
    benchmark: str = BENCHMARK,
    joint: bool = False,
) -> EvaluationResult:
    """
    Expanding-window evaluation of every (class, spec) pair. Each (class,
    spec, origin) runs on its own rng stream, so results do not depend on
    ``threads`` or on the order of ``grid``.

    :param grid: tag -> SpecTemplate
    :param classes: model classes sharing target labels and dates
    :param first_origin: date of the last observation of the first window
    :param last_origin: date of the last observation of the last window
    :param horizons: forecast horizons
    :param seed: int
    :param threads: worker threads
    :param benchmark: "class:spec"
    :param joint: also report the joint log score
    :return: EvaluationResult
    """
    if not grid or not classes:
        raise SpecValidationError("evaluation needs specifications and data")
    names = {mc.name for mc in classes}
    bench_class, _, bench_tag = benchmark.partition(":")
    if bench_class not in names or bench_tag not in grid:
        raise SpecValidationError(f"benchmark {benchmark} is not in the grid")
    labels = {mc.target_labels for mc in classes}
    if len(labels) > 1:
        raise SpecValidationError("model classes must share their targets")
    if min(horizons) < 1:
        raise SpecValidationError("horizons must be positive")

    root = RngStream(seed)
    jobs = []
    for mc in classes:
        rows = origin_rows(mc.panel, first_origin, last_origin)
        for tag, template in grid.items():
            needed = template.P + MIN_EXTRA_ROWS + 1
            if rows[0] < needed:
                raise SpecValidationError(
                    f"{mc.name}:{tag} needs {needed} training rows, the "
                    f"first origin leaves {rows[0]}"
                )
            stream = root.spawn(f"{mc.name}/{tag}")
            for r in rows:
                jobs.append(
                    partial(
                        _origin_job,
                        template,
                        tag,
                        mc,
                        r,
                        stream.spawn(r),
                        tuple(horizons),
                    )
                )

    logger.info(f"evaluating {len(jobs)} (spec, origin) pairs")
    results = run_in_threads(jobs, threads)
    records = [rec for batch in results for rec in batch]
    table = score_table(records_frame(records), benchmark, joint)
    return EvaluationResult(table=table, records=records)
