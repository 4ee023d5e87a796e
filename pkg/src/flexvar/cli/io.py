"""
CSV interchange. A data file has an ISO-8601 ``date`` column (one row per
month), the endogenous series, and optional observed modifiers in columns
prefixed ``mod_``. Error messages quote file line numbers (header = 1).
"""

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd
from loguru import logger

from flexvar.model.core import DataPanel
from flexvar.model.errors import SpecValidationError

DATE_COLUMN = "date"
MODIFIER_PREFIX = "mod_"
FLOAT_FORMAT = "%.17g"


def _line(position: int) -> int:
    """File line of data row ``position`` (0-based, after the header)."""
    return position + 2


def _parse_float(text) -> float:
    """Correctly rounded parse; anything unparsable becomes NaN."""
    try:
        return float(str(text).strip())
    except ValueError:
        return np.nan


def read_frame(path: Path | str) -> pd.DataFrame:
    """
    Read a data file into a float frame indexed by monthly periods, in the
    column order of the header.

    :raises SpecValidationError: missing date column, unparsable values,
        duplicate or missing months
    """
    path = Path(path)
    if not path.exists():
        raise SpecValidationError(f"data file {path} not found")
    raw = pd.read_csv(path, dtype=str, keep_default_na=False)
    if DATE_COLUMN not in raw.columns:
        raise SpecValidationError(f"{path}: no '{DATE_COLUMN}' column", line=1)
    if len(raw.columns) != len(set(raw.columns)):
        raise SpecValidationError(f"{path}: duplicate column names", line=1)
    if raw.empty:
        raise SpecValidationError(f"{path}: no data rows")

    dates = pd.to_datetime(raw[DATE_COLUMN], errors="coerce", format="ISO8601")
    bad = np.flatnonzero(dates.isna().to_numpy())
    if bad.size:
        value = raw[DATE_COLUMN].iloc[bad[0]]
        raise SpecValidationError(
            f"{path}: cannot parse date {value!r}", line=_line(bad[0])
        )
    periods = pd.DatetimeIndex(dates).to_period("M")
    steps = np.diff(periods.asi8)
    if np.any(steps != 1):
        pos = int(np.flatnonzero(steps != 1)[0]) + 1
        kind = "duplicate or unordered" if steps[pos - 1] < 1 else "missing"
        raise SpecValidationError(
            f"{path}: {kind} month before {periods[pos]}", line=_line(pos)
        )

    values = {}
    for column in raw.columns:
        if column == DATE_COLUMN:
            continue
        numeric = np.array([_parse_float(v) for v in raw[column]], dtype=float)
        bad = np.flatnonzero(~np.isfinite(numeric))
        if bad.size:
            value = raw[column].iloc[bad[0]]
            raise SpecValidationError(
                f"{path}: column {column!r} has non-numeric value {value!r}",
                line=_line(bad[0]),
            )
        values[column] = numeric

    frame = pd.DataFrame(values, index=periods)
    frame.index.name = DATE_COLUMN
    logger.debug(f"read {frame.shape[0]} rows x {frame.shape[1]} from {path}")
    return frame


def write_frame(frame: pd.DataFrame, path: Path | str) -> Path:
    """Inverse of ``read_frame`` to full double precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    out = frame.copy()
    if isinstance(out.index, pd.PeriodIndex):
        out.index = out.index.to_timestamp().strftime("%Y-%m-%d")
    out.index.name = DATE_COLUMN
    out.to_csv(path, float_format=FLOAT_FORMAT)
    return path


@dataclass
class IngestedData:
    """
    ``panel`` in model units; ``levels`` holds the untransformed series on
    the panel's rows when the panel is differenced.
    """

    panel: DataPanel
    levels: np.ndarray | None
    frame: pd.DataFrame


def _pick(frame, wanted, default, kind) -> list[str]:
    if wanted is None:
        return list(default)
    missing = [c for c in wanted if c not in frame.columns]
    if missing:
        raise SpecValidationError(f"{kind} columns not in the data: {missing}")
    return list(wanted)


def _dates(index: pd.PeriodIndex) -> np.ndarray:
    return index.to_timestamp().to_numpy().astype("datetime64[D]")


def panel_from_frame(
    frame: pd.DataFrame,
    columns: Sequence[str] | None = None,
    modifiers: Sequence[str] | None = None,
    difference: bool = False,
    lag_modifiers: bool = True,
) -> IngestedData:
    """
    Build the model panel. Differencing and the one-period modifier lag
    each need the previous row, so the first row is dropped when either
    applies. The last unlagged modifier row becomes ``R_next``.
    """
    endo_default = [
        c for c in frame.columns if not c.startswith(MODIFIER_PREFIX)
    ]
    mod_default = [c for c in frame.columns if c.startswith(MODIFIER_PREFIX)]
    endo = _pick(frame, columns, endo_default, "endogenous")
    mods = _pick(frame, modifiers, mod_default, "modifier")
    if not endo:
        raise SpecValidationError("no endogenous columns selected")
    overlap = set(endo) & set(mods)
    if overlap:
        raise SpecValidationError(f"columns used twice: {sorted(overlap)}")

    levels = frame[endo].to_numpy()
    R = frame[mods].to_numpy() if mods else None
    lagged = R is not None and lag_modifiers
    start = 1 if (difference or lagged) else 0
    if frame.shape[0] - start < 2:
        raise SpecValidationError("not enough rows after transformation")

    Y = np.diff(levels, axis=0)[start - 1 :] if difference else levels[start:]
    R_obs, R_next = None, None
    if R is not None:
        R_obs = R[:-1] if lagged else R[start:]
        R_next = R[-1] if lagged else None

    panel = DataPanel(
        dates=_dates(frame.index[start:]),
        Y=Y,
        R_obs=R_obs,
        labels=tuple(endo),
        modifier_labels=tuple(m.removeprefix(MODIFIER_PREFIX) for m in mods),
        R_next=R_next,
    )
    return IngestedData(
        panel=panel,
        levels=levels[start:] if difference else None,
        frame=frame,
    )


def read_panel(
    path: Path | str,
    columns: Sequence[str] | None = None,
    modifiers: Sequence[str] | None = None,
    difference: bool = False,
    lag_modifiers: bool = True,
) -> IngestedData:
    return panel_from_frame(
        read_frame(path), columns, modifiers, difference, lag_modifiers
    )


def frame_from_panel(panel: DataPanel) -> pd.DataFrame:
    """
    Data-file layout of a panel. Modifiers are written unlagged (row t holds
    the value that enters z at t + 1), so ``panel_from_frame`` with its
    default lag restores the panel minus its first row.
    """
    index = pd.DatetimeIndex(panel.dates).to_period("M")
    frame = pd.DataFrame(panel.Y, index=index, columns=list(panel.labels))
    if panel.R_obs is not None:
        unlagged = np.vstack(
            [
                panel.R_obs[1:],
                (
                    panel.R_next[None, :]
                    if panel.R_next is not None
                    else panel.R_obs[-1:]
                ),
            ]
        )
        for i, label in enumerate(panel.modifier_labels):
            frame[f"{MODIFIER_PREFIX}{label}"] = unlagged[:, i]
    frame.index.name = DATE_COLUMN
    return frame
