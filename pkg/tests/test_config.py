"""test_config.py - Unit tests for RunConfig, initial-shape parsing and layered resolution.

Covers:
    - Defaults and the merged tolerance table
    - String coercion through from_mapping (numbers, windows, booleans, modes)
    - Unknown keys and tolerances are errors
    - InitialShape grammar and its error messages
    - Precedence: defaults < environment < config file < overrides
"""

import pytest

from shrinklab.config import DEFAULT_TOLERANCES, InitialShape, RunConfig, resolve_config
from shrinklab.errors import InvalidArgument
from shrinklab.flow import FlowMode


# ---------------------------------------------------------------------------
# RunConfig
# ---------------------------------------------------------------------------


class TestRunConfig:
    def test_defaults(self):
        config = RunConfig()
        assert config.initial == "ellipse:2,1"
        assert config.mode is FlowMode.RESCALED
        assert config.n_points == 256
        assert config.fit_window == (2.0, 6.0)
        assert config.tolerances == DEFAULT_TOLERANCES
        assert config.tol("tail_start") == 8.0

    def test_default_run_reaches_the_integrability_tail(self):
        config = RunConfig()
        assert config.t_end == 10.0
        assert config.t_end > config.tol("tail_start")

    def test_partial_tolerances_are_merged(self):
        config = RunConfig(tolerances={"ndot_slack": 0.2})
        assert config.tol("ndot_slack") == 0.2
        assert config.tol("convexity") == DEFAULT_TOLERANCES["convexity"]

    def test_from_strings(self):
        config = RunConfig.from_mapping(
            {
                "n-points": "64",
                "dt": "5e-3",
                "fit_window": "1, 3",
                "normalize": "false",
                "mode": "normal",
                "tol_ndot_slack": "0.1",
            }
        )
        assert config.n_points == 64
        assert config.dt == 5e-3
        assert config.fit_window == (1.0, 3.0)
        assert config.normalize is False
        assert config.mode is FlowMode.NORMAL_RESCALED
        assert config.tol("ndot_slack") == 0.1

    def test_integer_given_as_float_text(self):
        assert RunConfig.from_mapping({"n_points": "64.0"}).n_points == 64

    @pytest.mark.parametrize(
        "data,match",
        [
            ({"n_points": "64.5"}, "n_points: expected a number"),
            ({"nsteps": "10"}, "unknown config key"),
            ({"tol_nope": "1"}, "unknown tolerance"),
            ({"normalize": "maybe"}, "expected a boolean"),
            ({"fit_window": "1,2,3"}, "start,end"),
            ({"fit_window": "3,1"}, "fit_window must satisfy"),
            ({"n_points": "8"}, "n_points must be >= 16"),
            ({"dt": "0"}, "dt must be > 0"),
            ({"derivative": "upwind"}, "derivative must be one of"),
            ({"mode": "willmore"}, "mode must be one of"),
            ({"initial": "square:1"}, "initial:"),
        ],
    )
    def test_invalid_values(self, data, match):
        with pytest.raises(InvalidArgument, match=match):
            RunConfig.from_mapping(data)

    def test_unknown_tolerance_lookup(self):
        with pytest.raises(InvalidArgument, match="unknown tolerance"):
            RunConfig().tol("nope")

    def test_to_dict_and_overrides(self):
        config = RunConfig(mode=FlowMode.MCF)
        data = config.to_dict()
        assert data["mode"] == "mcf"
        assert data["fit_window"] == [2.0, 6.0]
        changed = config.with_overrides(n_points=64, t_end=None)
        assert changed.n_points == 64
        assert changed.t_end == config.t_end
        assert changed.mode is FlowMode.MCF


# ---------------------------------------------------------------------------
# InitialShape
# ---------------------------------------------------------------------------


class TestInitialShape:
    @pytest.mark.parametrize(
        "text,kind,params,modes",
        [
            ("circle:2", "circle", (2.0,), ()),
            ("ellipse:2,1", "ellipse", (2.0, 1.0), ()),
            (" Ellipse:3, 0.5", "ellipse", (3.0, 0.5), ()),
            ("fourier:2:0.05", "fourier", (), ((2, 0.05),)),
            ("fourier:2:0.05,3:-0.01", "fourier", (), ((2, 0.05), (3, -0.01))),
        ],
    )
    def test_parse(self, text, kind, params, modes):
        shape = InitialShape.parse(text)
        assert (shape.kind, shape.params, shape.modes) == (kind, params, modes)

    def test_file(self):
        shape = InitialShape.parse("file:curves/blob.csv")
        assert shape.path == "curves/blob.csv"
        assert str(shape) == "file:curves/blob.csv"

    def test_str(self):
        assert str(InitialShape.parse("fourier:2:0.05,3:0.1")) == "fourier:2:0.05,3:0.1"
        assert str(InitialShape.parse("ellipse:2,1")) == "ellipse:2,1"

    @pytest.mark.parametrize(
        "text,match",
        [
            ("blob", "expected one of"),
            ("circle:1,2", "takes 1 parameter"),
            ("ellipse:2,-1", "must be > 0"),
            ("circle:abc", "expected a number"),
            ("fourier:2", "not k:amplitude"),
            ("fourier:-1:0.1", "must be >= 0"),
            ("file:", "needs a path"),
        ],
    )
    def test_errors_name_the_field(self, text, match):
        with pytest.raises(InvalidArgument, match=match) as info:
            InitialShape.parse(text)
        assert str(info.value).startswith("initial")


# ---------------------------------------------------------------------------
# resolve_config
# ---------------------------------------------------------------------------


class TestResolveConfig:
    def test_environment(self):
        env = {"SHRINKLAB_T_END": "3", "SHRINKLAB_TOL_CONVEXITY": "0.3", "UNRELATED": "x"}
        config = resolve_config(environ=env)
        assert config.t_end == 3.0
        assert config.tol("convexity") == 0.3

    def test_precedence(self, tmp_path):
        path = tmp_path / "run.env"
        path.write_text("# experiment\nt_end=4\nn_points=64\ntol_tail_start=2\n", encoding="utf-8")
        env = {"SHRINKLAB_T_END": "3", "SHRINKLAB_DT": "0.01"}
        config = resolve_config({"t_end": "5", "mode": None}, config_file=path, environ=env)
        assert config.t_end == 5.0
        assert config.n_points == 64
        assert config.dt == 0.01
        assert config.tol("tail_start") == 2.0
        assert config.mode is FlowMode.RESCALED

    def test_missing_file(self, tmp_path):
        with pytest.raises(InvalidArgument, match="does not exist"):
            resolve_config(config_file=tmp_path / "absent.env", environ={})

    def test_unknown_key_in_file(self, tmp_path):
        path = tmp_path / "bad.env"
        path.write_text("t_ned=4\n", encoding="utf-8")
        with pytest.raises(InvalidArgument, match="unknown config key"):
            resolve_config(config_file=path, environ={})
