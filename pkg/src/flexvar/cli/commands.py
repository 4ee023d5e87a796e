"""
Subcommand bodies. Each takes a RunConfig and returns the paths it wrote.
"""

from pathlib import Path

import numpy as np
import pandas as pd
import simplejson as json
from loguru import logger

from flexvar.cli.config import RunConfig
from flexvar.cli.io import (
    FLOAT_FORMAT,
    MODIFIER_PREFIX,
    IngestedData,
    frame_from_panel,
    panel_from_frame,
    read_frame,
    read_panel,
    write_frame,
)
from flexvar.dgp import TruthRecord, simulate_dgp
from flexvar.forecast import (
    ModelClass,
    recursive_evaluate,
    records_frame,
    simulate_predictive,
    to_targets,
)
from flexvar.forecast.consts import SUMMARY_QUANTILES, VAR_CLASS
from flexvar.gibbs import normalize_modifiers, run_chain
from flexvar.longrun import longrun_paths
from flexvar.model import ModelSpec, PosteriorDraws, validate_spec
from flexvar.model.consts import TIMINGS_KEY
from flexvar.model.errors import SpecValidationError
from flexvar.model.storage import read_draws, write_draws
from flexvar.model.utils import template_grid
from flexvar.rng import RngStream
from flexvar.settings import get_settings
from flexvar.utils import content_hash
from flexvar.yields import (
    FACTOR_NAMES,
    extract_factors,
    loading_matrix,
    reconstruct_yields,
)

DRAWS_DIR = "draws"


def _guard_outputs(outputs: list[Path], inputs: list[Path | None]):
    """Refuse to write over (or inside) any input."""
    sources = [Path(p).resolve() for p in inputs if p is not None]
    for out in outputs:
        out = Path(out).resolve()
        for src in sources:
            if out == src or src in out.parents or out in src.parents:
                raise SpecValidationError(
                    f"output {out} overlaps the input {src}"
                )


def _write_json(payload: dict, path: Path) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(
        json.dumps(payload, indent=2, sort_keys=True, ignore_nan=True)
    )
    return path


def _ingest(config: RunConfig) -> IngestedData:
    data = config.require_data()
    return read_panel(
        data.path,
        data.columns,
        data.modifiers,
        data.difference,
        data.lag_modifiers,
    )


def _spec(config: RunConfig, M: int, R_r: int) -> ModelSpec:
    template = config.model.to_template(R_r, config.priors, config.mcmc)
    return template.for_system(M)


def _modifier_names(spec: ModelSpec, r_labels, j: int) -> list[str]:
    names = []
    if spec.include_obs:
        names += [f"r:{label}" for label in r_labels]
    if spec.include_ms:
        names.append("S")
    names += [f"tau{k + 1}" for k in range(spec.delta_for(j))]
    return names


def modifier_summaries(
    draws: PosteriorDraws,
    R_obs: np.ndarray | None,
    r_labels=(),
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """
    Posterior medians (and 68% bands) of the normalized modifiers and of the
    normalized loadings of every equation, each draw normalized on its own.
    """
    spec = draws.spec
    z_rows, load_rows = [], []
    for j, label in enumerate(draws.labels):
        if not spec.R_for(j):
            continue
        z = draws.modifiers(j, R_obs)
        Lambda = draws.get("Lambda", j)
        normed = [normalize_modifiers(z[i], Lambda[i]) for i in range(len(z))]
        z_n = np.stack([n.z for n in normed])
        L_n = np.stack([n.Lambda for n in normed])
        zq = np.quantile(z_n, (0.16, 0.5, 0.84), axis=0)
        Lq = np.median(L_n, axis=0)
        names = _modifier_names(spec, r_labels, j)
        for t, date in enumerate(draws.dates):
            for c, name in enumerate(names):
                z_rows.append(
                    {
                        "date": str(date),
                        "equation": label,
                        "modifier": name,
                        "median": zq[1, t, c],
                        "q16": zq[0, t, c],
                        "q84": zq[2, t, c],
                    }
                )
        for i in range(Lq.shape[0]):
            for c, name in enumerate(names):
                load_rows.append(
                    {
                        "equation": label,
                        "coefficient": i,
                        "modifier": name,
                        "median": Lq[i, c],
                    }
                )
    return pd.DataFrame(z_rows), pd.DataFrame(load_rows)


def cmd_estimate(config: RunConfig) -> list[Path]:
    data = _ingest(config)
    panel = data.panel
    spec = _spec(config, panel.M, panel.R_r)
    validate_spec(spec, panel)
    out = Path(config.out)
    draws_dir = out / DRAWS_DIR
    _guard_outputs([draws_dir], [config.require_data().path])

    draws = run_chain(spec, panel, RngStream(config.effective_seed))
    written = [write_draws(draws, draws_dir)]

    R_obs = panel.R_obs[spec.P :] if spec.include_obs else None
    z_frame, load_frame = modifier_summaries(
        draws, R_obs, panel.modifier_labels
    )
    if not z_frame.empty:
        for frame, name in ((z_frame, "modifiers"), (load_frame, "loadings")):
            path = out / f"{name}.csv"
            frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)
            written.append(path)

    summary = {
        "spec": spec.model_dump(mode="json"),
        "spec_hash": draws.metadata["spec_hash"],
        "seed": config.effective_seed,
        "T": panel.T,
        "T_eff": draws.T_eff,
        "n_stored": draws.n_stored,
        "timings": draws.metadata.get(TIMINGS_KEY),
        "diagnostics": draws.metadata.get("diagnostics"),
    }
    written.append(_write_json(summary, out / "summary.json"))
    logger.info(f"estimate: wrote {len(written)} outputs to {out}")
    return written


def cmd_forecast(config: RunConfig) -> list[Path]:
    data = _ingest(config)
    panel = data.panel
    out = Path(config.out)
    draws_dir = config.forecast.draws or out / DRAWS_DIR
    draws = read_draws(draws_dir)
    spec = draws.spec
    if panel.M != spec.M or str(panel.dates[-1]) != str(draws.dates[-1]):
        raise SpecValidationError(
            f"data in {config.require_data().path} do not end where the "
            f"draws in {draws_dir} end"
        )
    targets_path = out / "forecast.csv"
    draws_path = out / "predictive_draws.csv"
    _guard_outputs(
        [targets_path, draws_path], [config.require_data().path, draws_dir]
    )

    horizons = config.forecast.horizons
    pred = simulate_predictive(
        draws,
        panel.Y,
        max(horizons),
        RngStream(config.effective_seed).generator("forecast"),
        R_next=panel.R_next,
    )
    base = None if data.levels is None else data.levels[-1]
    pred = to_targets(pred, level_base=base)

    rows, raw = [], []
    for h in horizons:
        values = pred.draws[:, h - 1]
        qs = np.quantile(values, SUMMARY_QUANTILES, axis=0)
        for i, label in enumerate(panel.labels):
            row = {"horizon": h, "target": label, "mean": values[:, i].mean()}
            for q, value in zip(SUMMARY_QUANTILES, qs[:, i]):
                row[f"q{round(100 * q):02d}"] = value
            rows.append(row)
            raw.append(
                pd.DataFrame(
                    {
                        "draw": np.arange(values.shape[0]),
                        "horizon": h,
                        "target": label,
                        "value": values[:, i],
                    }
                )
            )
    out.mkdir(parents=True, exist_ok=True)
    pd.DataFrame(rows).to_csv(
        targets_path, index=False, float_format=FLOAT_FORMAT
    )
    pd.concat(raw).to_csv(draws_path, index=False, float_format=FLOAT_FORMAT)
    return [targets_path, draws_path]


def _yield_columns(config: RunConfig, frame: pd.DataFrame) -> list[str]:
    """Yield columns: the Nelson-Siegel list, else the data list, else all."""
    columns = config.nelson_siegel.columns or config.require_data().columns
    if columns is None:
        columns = [
            c for c in frame.columns if not c.startswith(MODIFIER_PREFIX)
        ]
    return list(columns)


def _model_classes(config: RunConfig) -> list[ModelClass]:
    data_cfg = config.require_data()
    frame = read_frame(data_cfg.path)
    ns_cfg = config.nelson_siegel
    columns = _yield_columns(config, frame)
    modifiers = data_cfg.modifiers
    if modifiers is None:
        modifiers = [c for c in frame.columns if c.startswith(MODIFIER_PREFIX)]
    missing = [m for m in modifiers if m not in frame.columns]
    if missing:
        raise SpecValidationError(
            f"modifier columns not in the data: {missing}"
        )
    classes = []

    for name in config.evaluation.classes:
        if name == VAR_CLASS:
            var_frame = frame[columns + list(modifiers)]
            target_map = None
        else:
            ns = ns_cfg.ns
            factors = extract_factors(frame[columns].to_numpy(), ns)
            var_frame = pd.DataFrame(
                factors, index=frame.index, columns=list(FACTOR_NAMES)
            )
            for m in modifiers:
                var_frame[m] = frame[m]
            target_map = loading_matrix(ns)
        ingested = panel_from_frame(
            var_frame,
            None,
            list(modifiers),
            data_cfg.difference,
            data_cfg.lag_modifiers,
        )
        start = frame.shape[0] - ingested.panel.T
        classes.append(
            ModelClass(
                name=name,
                panel=ingested.panel,
                realized=frame[columns].to_numpy()[start:],
                target_labels=tuple(columns),
                target_map=target_map,
                levels=ingested.levels,
            )
        )
    return classes


def cmd_evaluate(config: RunConfig) -> list[Path]:
    evaluation = config.evaluation
    if evaluation is None:
        raise SpecValidationError("the configuration has no evaluation section")
    out = Path(config.out)
    scores_path = out / "scores.csv"
    records_path = out / "records.csv"
    _guard_outputs([scores_path, records_path], [config.require_data().path])

    classes = _model_classes(config)
    R_r = classes[0].panel.R_r
    grid = template_grid(
        P=config.model.P,
        R_r=max(R_r, 1),
        random_walk=evaluation.random_walk,
        intercept=config.model.intercept,
        priors=config.priors,
        mcmc=config.mcmc,
    )
    if evaluation.grid != "full":
        unknown = [tag for tag in evaluation.grid if tag not in grid]
        if unknown:
            raise SpecValidationError(f"unknown specification tags {unknown}")
        grid = {tag: grid[tag] for tag in evaluation.grid}
    if not R_r:
        grid = {k: t for k, t in grid.items() if not t.include_obs}
    if evaluation.benchmark.partition(":")[2] not in grid:
        raise SpecValidationError(
            f"benchmark {evaluation.benchmark} is missing from the grid"
        )

    threads = config.threads or get_settings().THREADS
    result = recursive_evaluate(
        grid,
        classes,
        evaluation.first_origin,
        evaluation.last_origin,
        horizons=config.forecast.horizons,
        seed=config.effective_seed,
        threads=threads,
        benchmark=evaluation.benchmark,
        joint=evaluation.joint,
    )
    out.mkdir(parents=True, exist_ok=True)
    result.table.to_csv(scores_path, float_format=FLOAT_FORMAT)
    records_frame(result.records).to_csv(
        records_path, index=False, float_format=FLOAT_FORMAT
    )
    if result.gaps:
        logger.warning(f"{len(result.gaps)} (model, origin) gaps in the table")
    return [scores_path, records_path]


def _truth_payload(truth: TruthRecord) -> dict:
    equations = []
    for eq in truth.equations:
        equations.append(
            {
                "gamma": eq.gamma.tolist(),
                "Lambda": eq.Lambda.tolist(),
                "omega": eq.omega.tolist(),
                "P": eq.P.tolist(),
                "sv": {
                    "mu": eq.sv.mu,
                    "psi": eq.sv.psi,
                    "sigma2": eq.sv.sigma2,
                },
            }
        )
    return {
        "spec": truth.spec.model_dump(mode="json"),
        "spec_hash": content_hash(truth.spec.model_dump(mode="json")),
        "equations": equations,
    }


def cmd_simulate(config: RunConfig) -> list[Path]:
    sim = config.simulate
    R_r = 1 if config.model.include_obs else 0
    spec = _spec(config, sim.M, R_r)
    rng = RngStream(config.effective_seed).generator("simulate")
    truth = "prior" if sim.truth == "prior" else TruthRecord.constant(spec)
    panel, truth = simulate_dgp(spec, truth, sim.T, rng)

    out = Path(config.out)
    data_path = write_frame(frame_from_panel(panel), out / "data.csv")
    truth_path = _write_json(_truth_payload(truth), out / "truth.json")
    paths_path = out / "truth_paths.npz"
    np.savez(
        paths_path,
        **{
            f"{name}_{j}": getattr(eq, name)
            for j, eq in enumerate(truth.equations)
            for name in ("gamma_tilde", "tau", "S", "h")
        },
    )
    return [data_path, truth_path, paths_path]


def cmd_extract_ns(config: RunConfig) -> list[Path]:
    data_cfg = config.require_data()
    ns_cfg = config.nelson_siegel
    ns = ns_cfg.ns
    frame = read_frame(data_cfg.path)
    columns = _yield_columns(config, frame)
    if len(columns) != len(ns.maturities):
        raise SpecValidationError(
            f"{len(columns)} yield columns for {len(ns.maturities)} maturities"
        )
    out = Path(config.out)
    factors_path = out / "factors.csv"
    resid_path = out / "ns_residuals.csv"
    _guard_outputs([factors_path, resid_path], [data_cfg.path])

    yields = frame[columns].to_numpy()
    factors = extract_factors(yields, ns)
    resid = yields - reconstruct_yields(factors, ns)
    write_frame(
        pd.DataFrame(factors, index=frame.index, columns=list(FACTOR_NAMES)),
        factors_path,
    )
    resid_frame = pd.DataFrame(resid, index=frame.index, columns=columns)
    write_frame(resid_frame, resid_path)
    rmse = np.sqrt((resid**2).mean(axis=0))
    logger.info(
        "NS fit RMSE by maturity: "
        + ", ".join(f"{c}={r:.4g}" for c, r in zip(columns, rmse))
    )
    return [factors_path, resid_path]


def cmd_longrun(config: RunConfig) -> list[Path]:
    out = Path(config.out)
    draws_dir = config.forecast.draws or out / DRAWS_DIR
    path = out / "longrun.csv"
    _guard_outputs([path], [draws_dir])
    summary = longrun_paths(read_draws(draws_dir))
    out.mkdir(parents=True, exist_ok=True)
    summary.to_frame().to_csv(path, index=False, float_format=FLOAT_FORMAT)
    return [path]


COMMANDS = {
    "estimate": cmd_estimate,
    "forecast": cmd_forecast,
    "evaluate": cmd_evaluate,
    "simulate": cmd_simulate,
    "extract-ns": cmd_extract_ns,
    "longrun": cmd_longrun,
}
