import numpy as np
import pytest
from numpy.testing import assert_allclose
from pandas.testing import assert_frame_equal

from flexvar.forecast import (
    ModelClass,
    forecast_origin,
    recursive_evaluate,
    records_frame,
    score_table,
)
from flexvar.forecast.evaluation import origin_rows
from flexvar.model import SpecTemplate
from flexvar.model.errors import IllConditionedError, SpecValidationError
from flexvar.rng import RngStream
from flexvar.yields import NsConfig, loading_matrix


@pytest.fixture
def grid(short_chain):
    return {
        "constant": SpecTemplate(P=1, static=True, mcmc=short_chain),
        "r0_d1_s0": SpecTemplate(P=1, delta=1, mcmc=short_chain),
    }


@pytest.fixture
def var_class(var1_panel):
    return ModelClass(
        name="VAR",
        panel=var1_panel,
        realized=var1_panel.Y,
        target_labels=("a", "b"),
    )


@pytest.fixture
def window(var1_panel):
    return var1_panel.dates[69], var1_panel.dates[72]


class TestModelClass:
    def test_target_map_shape(self, var1_panel):
        with pytest.raises(SpecValidationError):
            ModelClass(
                "NS-VAR",
                var1_panel,
                realized=np.zeros((var1_panel.T, 6)),
                target_map=np.ones((6, 3)),
            )

    def test_targets_default_to_model_variables(self, var1_panel):
        with pytest.raises(SpecValidationError):
            ModelClass("VAR", var1_panel, realized=np.zeros((80, 3)))

    def test_factor_targets(self, var1_panel):
        A = loading_matrix(NsConfig(maturities=(1.0, 5.0, 10.0)))[:, :2]
        mc = ModelClass(
            "NS-VAR", var1_panel, np.zeros((80, 3)), target_map=A
        )
        assert mc.target_labels == ("target1", "target2", "target3")


def test_origin_rows(var1_panel, window):
    assert origin_rows(var1_panel, *window) == [70, 71, 72, 73]
    with pytest.raises(SpecValidationError):
        origin_rows(var1_panel, window[1], window[0])


def test_forecast_origin_records(grid, var_class):
    records = forecast_origin(
        grid["r0_d1_s0"],
        "r0_d1_s0",
        var_class,
        70,
        RngStream(1),
        horizons=(1, 3),
        keep_draws=True,
    )
    assert [r.horizon for r in records] == [1, 3]
    assert records[0].draws.shape == (20, 2)
    assert_allclose(records[1].realized, var_class.realized[72])
    assert records[0].model == "VAR:r0_d1_s0"
    assert np.all(np.isfinite(records[0].log_score))


class TestRecursiveEvaluation:
    def test_benchmark_row_and_reproducibility(self, grid, var_class, window):
        first = recursive_evaluate(grid, [var_class], *window, seed=5)
        table = first.table
        assert list(table.index) == ["VAR:constant", "VAR:r0_d1_s0"]
        bench = table.loc["VAR:constant"]
        rmse = [c for c in table.columns if c.startswith("rmse_")]
        lpbf = [c for c in table.columns if c.startswith("lpbf_")]
        assert len(rmse) == len(lpbf) == 4
        assert (bench[rmse] == 1.0).all()
        assert (bench[lpbf] == 0.0).all()
        assert (table["gaps"] == 0).all()

        second = recursive_evaluate(
            dict(reversed(list(grid.items()))),
            [var_class],
            *window,
            seed=5,
            threads=2,
        )
        assert_frame_equal(second.table.sort_index(), table.sort_index())

    def test_table_matches_records(self, grid, var_class, window):
        result = recursive_evaluate(grid, [var_class], *window, seed=6)
        frame = records_frame(result.records)
        own = frame[(frame.model == "VAR:r0_d1_s0") & (frame.horizon == 1)]
        bench = frame[(frame.model == "VAR:constant") & (frame.horizon == 1)]
        own, bench = own[own.target == "b"], bench[bench.target == "b"]
        expected = np.mean(
            own.log_score.to_numpy() - bench.log_score.to_numpy()
        )
        assert_allclose(
            result.table.loc["VAR:r0_d1_s0", "lpbf_b_h1"], expected
        )
        assert_frame_equal(score_table(frame), result.table)

    def test_failed_origin_is_a_gap(
        self, grid, var_class, window, monkeypatch
    ):
        from flexvar.forecast import evaluation

        original = evaluation.run_chain

        def flaky(spec, panel, stream):
            if spec.delta and panel.T == 71:
                raise IllConditionedError("singular precision")
            return original(spec, panel, stream)

        monkeypatch.setattr(evaluation, "run_chain", flaky)
        result = recursive_evaluate(
            grid, [var_class], *window, seed=7, joint=True
        )
        assert result.table.loc["VAR:r0_d1_s0", "gaps"] == 1
        assert result.table.loc["VAR:constant", "gaps"] == 0
        assert len(result.gaps) == 1
        assert "lpbf_joint_h3" in result.table.columns

    def test_missing_benchmark(self, grid, var_class, window):
        with pytest.raises(SpecValidationError):
            recursive_evaluate(
                grid, [var_class], *window, benchmark="VAR:r1_d0_s0"
            )

    def test_short_training_window(self, grid, var_class, var1_panel):
        with pytest.raises(SpecValidationError):
            recursive_evaluate(
                grid, [var_class], var1_panel.dates[3], var1_panel.dates[5]
            )
