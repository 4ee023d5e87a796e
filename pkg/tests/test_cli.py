import numpy as np
import pandas as pd
import pytest
import simplejson as json
from numpy.testing import assert_allclose, assert_array_equal
from pydantic import ValidationError

from flexvar.cli.commands import COMMANDS, _guard_outputs
from flexvar.cli.config import load_config
from flexvar.cli.io import (
    frame_from_panel,
    panel_from_frame,
    read_frame,
    write_frame,
)
from flexvar.cli.main import EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION, main
from flexvar.model.errors import IllConditionedError, SpecValidationError
from flexvar.model.storage import read_draws

SHORT_MCMC = {"draws": 30, "burn": 10, "thin": 1, "log_every": 10}


def write_text(path, text):
    path.write_text(text)
    return path


def write_config(path, payload):
    path.write_text(json.dumps(payload, indent=2))
    return path


class TestReadFrame:
    @pytest.mark.parametrize(
        "body, line, fragment",
        [
            ("2000-01-01,1\nsoon,2\n", 3, "cannot parse date"),
            ("2000-01-01,1\n2000-03-01,2\n", 3, "missing month"),
            ("2000-01-01,1\n2000-02-01,2\n2000-03-01,x\n", 4, "non-numeric"),
            ("2000-01-01,1\n2000-02-01,\n", 3, "non-numeric"),
        ],
    )
    def test_errors_quote_the_line(self, tmp_path, body, line, fragment):
        path = write_text(tmp_path / "bad.csv", "date,y1\n" + body)
        with pytest.raises(SpecValidationError) as info:
            read_frame(path)
        assert info.value.line == line
        assert fragment in str(info.value)

    def test_missing_date_column(self, tmp_path):
        path = write_text(tmp_path / "bad.csv", "when,y1\n2000-01-01,1\n")
        with pytest.raises(SpecValidationError) as info:
            read_frame(path)
        assert info.value.line == 1

    def test_missing_file(self, tmp_path):
        with pytest.raises(SpecValidationError):
            read_frame(tmp_path / "absent.csv")

    def test_full_precision_round_trip(self, tmp_path, rng):
        frame = pd.DataFrame(
            {"y1": rng.standard_normal(2000) * 10.0 ** rng.integers(-8, 8, 2000)},
            index=pd.period_range("1850-01", periods=2000, freq="M"),
        )
        back = read_frame(write_frame(frame, tmp_path / "f.csv"))
        assert_array_equal(back["y1"].to_numpy(), frame["y1"].to_numpy())
        assert list(back.index.astype(str)) == list(frame.index.astype(str))


class TestPanelFromFrame:
    def test_default_columns_and_lag(self, data_file):
        frame = read_frame(data_file)
        ingested = panel_from_frame(frame)
        panel = ingested.panel
        assert panel.labels == ("y1", "y3", "y10")
        assert panel.modifier_labels == ("stress",)
        assert panel.T == 59
        stress = frame["mod_stress"].to_numpy()
        assert_array_equal(panel.R_obs[:, 0], stress[:-1])
        assert_array_equal(panel.R_next, stress[-1:])
        assert ingested.levels is None

    def test_round_trip_drops_first_row(self, var1_panel):
        back = panel_from_frame(frame_from_panel(var1_panel)).panel
        assert_array_equal(back.Y, var1_panel.Y[1:])
        assert_array_equal(back.R_obs, var1_panel.R_obs[1:])
        assert_array_equal(back.R_next, var1_panel.R_next)
        assert_array_equal(back.dates, var1_panel.dates[1:])

    def test_difference(self, data_file):
        frame = read_frame(data_file)
        ingested = panel_from_frame(frame, modifiers=[], difference=True)
        levels = frame[["y1", "y3", "y10"]].to_numpy()
        assert_allclose(ingested.panel.Y, np.diff(levels, axis=0))
        assert_array_equal(ingested.levels, levels[1:])
        assert ingested.panel.R_obs is None

    def test_column_errors(self, data_file):
        frame = read_frame(data_file)
        with pytest.raises(SpecValidationError):
            panel_from_frame(frame, columns=["y2"])
        with pytest.raises(SpecValidationError):
            panel_from_frame(frame, columns=["y1"], modifiers=["y1"])


class TestConfig:
    def test_unknown_key(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"model": {"lags": 2}})
        with pytest.raises(ValidationError):
            load_config(path)

    def test_malformed_json_reports_line(self, tmp_path):
        path = write_text(tmp_path / "c.json", '{\n  "seed": 1\n  "out": "x"\n}\n')
        with pytest.raises(SpecValidationError) as info:
            load_config(path)
        assert info.value.line == 3

    def test_relative_paths_and_overrides(self, tmp_path):
        path = write_config(
            tmp_path / "c.json",
            {"data": {"path": "data.csv"}, "mcmc": {"seed": 4}},
        )
        config = load_config(path)
        assert config.data.path == tmp_path / "data.csv"
        assert config.effective_seed == 4
        config = config.with_overrides(seed=9, threads=2)
        assert config.effective_seed == 9
        assert config.mcmc.seed == 9
        assert config.threads == 2

    def test_modifier_prefix_optional(self, tmp_path, data_file):
        path = write_config(
            tmp_path / "c.json",
            {"data": {"path": str(data_file), "modifiers": ["stress"]}},
        )
        config = load_config(path)
        assert config.data.modifiers == ("mod_stress",)
        frame = read_frame(data_file)
        panel = panel_from_frame(frame, modifiers=config.data.modifiers).panel
        assert panel.modifier_labels == ("stress",)

    def test_unknown_modifier_is_a_validation_error(self, tmp_path, data_file):
        path = write_config(
            tmp_path / "c.json",
            {
                "data": {"path": str(data_file), "modifiers": ["absent"]},
                "evaluation": {
                    "first_origin": "2005-06-01",
                    "last_origin": "2005-07-01",
                },
            },
        )
        args = ["evaluate", "--config", str(path), "--out", str(tmp_path / "e")]
        assert main(args) == EXIT_VALIDATION

    def test_benchmark_format(self, tmp_path):
        payload = {
            "evaluation": {
                "first_origin": "2005-01-01",
                "last_origin": "2005-02-01",
                "benchmark": "constant",
            }
        }
        with pytest.raises(ValidationError):
            load_config(write_config(tmp_path / "c.json", payload))


class TestGuardOutputs:
    def test_overlap(self, tmp_path):
        data = tmp_path / "in" / "data.csv"
        with pytest.raises(SpecValidationError):
            _guard_outputs([data], [data])
        with pytest.raises(SpecValidationError):
            _guard_outputs([tmp_path / "in"], [data])
        with pytest.raises(SpecValidationError):
            _guard_outputs([tmp_path / "draws" / "x.csv"], [tmp_path / "draws"])
        _guard_outputs([tmp_path / "out" / "x.csv"], [data, None])


class TestExitCodes:
    def test_validation_error(self, tmp_path):
        path = write_config(tmp_path / "c.json", {"unknown": 1})
        assert main(["simulate", "--config", str(path)]) == EXIT_VALIDATION

    def test_missing_data_section(self, tmp_path):
        out = tmp_path / "out"
        assert main(["estimate", "--out", str(out)]) == EXIT_VALIDATION

    def test_numerical_error(self, tmp_path, monkeypatch):
        def failing(config):
            raise IllConditionedError("singular precision")

        monkeypatch.setitem(COMMANDS, "estimate", failing)
        assert main(["estimate", "--out", str(tmp_path)]) == EXIT_NUMERICAL


class TestPipeline:
    @pytest.fixture
    def simulated(self, tmp_path):
        config = write_config(
            tmp_path / "sim.json",
            {
                "model": {"P": 1, "include_obs": True, "delta": 1},
                "simulate": {"M": 2, "T": 60, "truth": "constant"},
            },
        )
        out = tmp_path / "sim"
        code = main(
            ["simulate", "--config", str(config), "--out", str(out)]
        )
        assert code == EXIT_OK
        return out

    def estimate_config(self, tmp_path, data):
        return write_config(
            tmp_path / "est.json",
            {
                "data": {"path": str(data)},
                "model": {"P": 1, "include_obs": True, "delta": 1},
                "mcmc": SHORT_MCMC,
            },
        )

    def test_simulate_outputs(self, simulated):
        frame = read_frame(simulated / "data.csv")
        assert list(frame.columns) == ["y1", "y2", "mod_r1"]
        assert frame.shape[0] == 60
        truth = json.loads((simulated / "truth.json").read_text())
        assert len(truth["equations"]) == 2
        paths = np.load(simulated / "truth_paths.npz")
        assert paths["tau_0"].shape == (59, 1)

    def test_estimate_forecast_longrun(self, tmp_path, simulated):
        config = self.estimate_config(tmp_path, simulated / "data.csv")
        first, second = tmp_path / "est1", tmp_path / "est2"
        for out in (first, second):
            args = ["estimate", "--config", str(config), "--out", str(out)]
            assert main(args + ["--seed", "8"]) == EXIT_OK

        for name in sorted(p.name for p in (first / "draws").iterdir()):
            a = (first / "draws" / name).read_bytes()
            assert a == (second / "draws" / name).read_bytes(), name
        draws = read_draws(first / "draws")
        assert draws.n_stored == 20
        assert (first / "modifiers.csv").exists()
        summary = json.loads((first / "summary.json").read_text())
        assert summary["seed"] == 8
        assert summary["T_eff"] == draws.T_eff

        fc_config = write_config(
            tmp_path / "fc.json",
            {
                "data": {"path": str(simulated / "data.csv")},
                "forecast": {"draws": str(first / "draws"), "horizons": [1, 2]},
            },
        )
        fc_out = tmp_path / "fc"
        args = ["forecast", "--config", str(fc_config), "--out", str(fc_out)]
        assert main(args) == EXIT_OK
        table = pd.read_csv(fc_out / "forecast.csv")
        assert len(table) == 4
        assert np.all(table["q05"] <= table["q95"])
        raw = pd.read_csv(fc_out / "predictive_draws.csv")
        assert len(raw) == 4 * 20

        args = ["longrun", "--config", str(fc_config), "--out", str(fc_out)]
        assert main(args) == EXIT_OK
        longrun = pd.read_csv(fc_out / "longrun.csv")
        assert len(longrun) == draws.T_eff * 2

    def test_forecast_refuses_mismatched_data(self, tmp_path, simulated):
        config = self.estimate_config(tmp_path, simulated / "data.csv")
        out = tmp_path / "est"
        assert main(["estimate", "--config", str(config), "--out", str(out)]) == 0
        frame = read_frame(simulated / "data.csv")
        short = write_frame(frame.iloc[:-3], tmp_path / "short.csv")
        fc_config = write_config(
            tmp_path / "fc.json",
            {
                "data": {"path": str(short)},
                "forecast": {"draws": str(out / "draws")},
            },
        )
        args = ["forecast", "--config", str(fc_config), "--out", str(out)]
        assert main(args) == EXIT_VALIDATION

    def test_extract_ns(self, tmp_path, data_file):
        config = write_config(
            tmp_path / "ns.json",
            {
                "data": {"path": str(data_file)},
                "nelson_siegel": {
                    "maturities": [1.0, 3.0, 10.0],
                    "columns": ["y1", "y3", "y10"],
                },
            },
        )
        out = tmp_path / "ns"
        assert main(["extract-ns", "--config", str(config), "--out", str(out)]) == 0
        factors = read_frame(out / "factors.csv")
        assert list(factors.columns) == ["level", "slope", "curvature"]
        assert factors.shape[0] == 60
        resid = read_frame(out / "ns_residuals.csv").to_numpy()
        assert_allclose(resid, 0.0, atol=1e-8)


@pytest.mark.slow
def test_evaluate_two_specifications(tmp_path, data_file):
    config = write_config(
        tmp_path / "eval.json",
        {
            "data": {"path": str(data_file)},
            "model": {"P": 1},
            "mcmc": SHORT_MCMC,
            "forecast": {"horizons": [1, 3]},
            "evaluation": {
                "first_origin": "2005-06-01",
                "last_origin": "2005-07-01",
                "grid": ["constant", "r1_d0_s0"],
            },
        },
    )
    out = tmp_path / "eval"
    assert main(["evaluate", "--config", str(config), "--out", str(out)]) == 0
    table = pd.read_csv(out / "scores.csv", index_col=0)
    assert list(table.index) == ["VAR:constant", "VAR:r1_d0_s0"]
    assert_allclose(table.loc["VAR:constant", "rmse_y1_h1"], 1.0)
    records = pd.read_csv(out / "records.csv")
    assert set(records["horizon"]) == {1, 3}
