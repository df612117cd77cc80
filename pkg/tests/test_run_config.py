"""Tests for run configuration parsing and validation."""

import math

import numpy as np
import pytest

from scattering.run_config import ConfigError, RunConfig, load_run_config, parse_config_text

SAMPLE = """\
# s-wave barrier, eta fixed along a momentum sweep
potential.kind = barrier
potential.R = 2.0
potential.eta = 0.05   # lambda follows p

scatter.methods = unitary1, unitary2, exact, unitary1
sweep.axis = p
sweep.start = 1
sweep.stop = 4
sweep.count = 4
"""


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text(SAMPLE, encoding="utf-8")
    return path


class TestParsing:
    """Tests for parse_config_text and load_run_config."""

    def test_sections_and_locations(self):
        data, locations = parse_config_text(SAMPLE, "run.cfg")
        assert data["potential"]["kind"] == "barrier"
        assert data["potential"]["eta"] == "0.05"
        assert locations[("potential", "R")] == "run.cfg:3"

    def test_load_file(self, config_file):
        config = load_run_config(config_file)
        assert config.potential.kind == "barrier"
        assert config.potential.R == 2.0
        assert config.scatter.methods == ["unitary1", "unitary2", "exact"]

    def test_overrides_apply_after_file(self, config_file):
        config = load_run_config(config_file, ["potential.R=3", "output.degrees=true"])
        assert config.potential.R == 3.0
        assert config.output.degrees is True

    def test_defaults(self):
        config = load_run_config()
        assert config.potential.kind == "well"
        assert config.potential.coupling == 0.1
        assert config.quad.grid_nodes == 64
        assert config.sweep_points() == [(1.0, 0.1)]

    def test_kind_shorthand_and_null(self):
        config = load_run_config(None, ["potential = gaussian", "output.r_max = none"])
        assert config.potential.kind == "gaussian"
        assert config.output.r_max is None

    def test_lambda_alias(self):
        assert load_run_config(None, ["potential.lambda=-0.3"]).potential.coupling == -0.3


class TestErrors:
    """Configuration errors carry their source line."""

    def test_malformed_line(self):
        with pytest.raises(ConfigError, match="--set\\[1\\]"):
            load_run_config(None, ["potential.R"])

    def test_unknown_section(self):
        with pytest.raises(ConfigError, match="unknown section"):
            load_run_config(None, ["solver.tol=1"])

    def test_key_must_be_namespaced(self):
        with pytest.raises(ConfigError):
            load_run_config(None, ["tol=1"])

    def test_unknown_key_points_at_line(self, tmp_path):
        path = tmp_path / "bad.cfg"
        path.write_text("potential.R = 1\n\npotential.depth = 3\n", encoding="utf-8")
        with pytest.raises(ConfigError, match="bad.cfg:3"):
            load_run_config(path)

    def test_range_violation(self):
        with pytest.raises(ConfigError, match="--set\\[2\\]"):
            load_run_config(None, ["potential.R=1", "scatter.m=-1"])

    def test_unknown_method(self):
        with pytest.raises(ConfigError):
            load_run_config(None, ["scatter.methods=unitary1,born"])

    def test_sweep_needs_range(self):
        with pytest.raises(ConfigError):
            load_run_config(None, ["sweep.axis=p"])

    def test_missing_file(self, tmp_path):
        with pytest.raises(ConfigError, match="cannot read"):
            load_run_config(tmp_path / "absent.cfg")

    def test_error_is_value_error(self):
        with pytest.raises(ValueError):
            load_run_config(None, ["potential.kind=yukawa"])


class TestRunConfig:
    """Tests for derived quantities on RunConfig."""

    def test_eta_pins_coupling(self, config_file):
        config = load_run_config(config_file)
        points = config.sweep_points()
        assert [p for p, _ in points] == [1.0, 2.0, 3.0, 4.0]
        for p, coupling in points:
            assert coupling * config.scatter.m / p == pytest.approx(0.05)

    def test_lambda_sweep(self):
        config = load_run_config(
            None, ["scatter.p=2", "sweep.axis=lambda", "sweep.start=0.1", "sweep.stop=0.4", "sweep.count=4"]
        )
        assert config.sweep_points() == [(2.0, pytest.approx(c)) for c in (0.1, 0.2, 0.3, 0.4)]

    def test_log_spacing(self):
        config = load_run_config(
            None, ["sweep.axis=p", "sweep.start=1", "sweep.stop=100", "sweep.count=3", "sweep.spacing=log"]
        )
        np.testing.assert_allclose(config.sweep.values(), [1.0, 10.0, 100.0])

    def test_hash_is_stable(self, config_file):
        first = load_run_config(config_file).config_hash()
        second = load_run_config(config_file).config_hash()
        assert first == second
        assert len(first) == 64

    def test_hash_tracks_values(self, config_file):
        base = load_run_config(config_file).config_hash()
        changed = load_run_config(config_file, ["potential.R=2.5"]).config_hash()
        assert base != changed

    def test_build_model(self):
        config = RunConfig()
        model = config.build_model(0.2)
        assert model.name == "well"
        assert model.coupling == 0.2
        assert model.evaluate(0.5) == pytest.approx(0.2)

    def test_half_period_point(self):
        config = load_run_config(None, [f"scatter.p={math.pi / 2!r}", "potential.eta=0.05"])
        ((p, coupling),) = config.sweep_points()
        assert p * config.potential.R == pytest.approx(math.pi / 2)
        assert coupling == pytest.approx(0.05 * math.pi / 2)
