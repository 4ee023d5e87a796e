import numpy as np
import pandas as pd
import pytest

from flexvar.cli.io import write_frame
from flexvar.dgp import TruthRecord, simulate_dgp
from flexvar.model import DataPanel, McmcConfig, ModelSpec

SHORT_CHAIN = McmcConfig(draws=40, burn=20, thin=1, seed=3, log_every=20)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


@pytest.fixture
def short_chain() -> McmcConfig:
    return SHORT_CHAIN


def monthly_dates(T: int, start: str = "2000-01") -> np.ndarray:
    dates = pd.period_range(start, periods=T, freq="M").to_timestamp()
    return dates.to_numpy().astype("datetime64[D]")


@pytest.fixture
def var1_panel(rng) -> DataPanel:
    """Bivariate VAR(1) with one persistent observed modifier."""
    T = 80
    A = np.array([[0.5, 0.1], [0.0, 0.3]])
    Y = np.zeros((T, 2))
    for t in range(1, T):
        Y[t] = A @ Y[t - 1] + 0.3 * rng.standard_normal(2)
    r = np.cumsum(0.2 * rng.standard_normal(T + 1))
    return DataPanel(
        dates=monthly_dates(T),
        Y=Y,
        R_obs=r[:-1, None],
        labels=("a", "b"),
        modifier_labels=("nfci",),
        R_next=r[-1:],
    )


@pytest.fixture
def constant_panel(rng) -> tuple[DataPanel, TruthRecord]:
    spec = ModelSpec.constant(M=2, P=1)
    truth = TruthRecord.constant(
        spec,
        gamma=[np.array([0.5, 0.1]), np.array([0.2, 0.4, 0.3])],
    )
    return simulate_dgp(spec, truth, 120, rng)


@pytest.fixture
def data_file(tmp_path, rng):
    """CSV with three series in levels and one modifier column."""
    T = 60
    levels = np.cumsum(0.1 * rng.standard_normal((T, 3)), axis=0) + 2.0
    frame = pd.DataFrame(
        levels,
        index=pd.period_range("2001-01", periods=T, freq="M"),
        columns=["y1", "y3", "y10"],
    )
    frame["mod_stress"] = rng.standard_normal(T)
    return write_frame(frame, tmp_path / "data.csv")
