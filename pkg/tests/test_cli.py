"""Tests for the phaseshift command line, the table writers and the validator."""

import io
import json
import math

import pytest

from phaseshift.cli import cmd_compare, cmd_wavefunction, main
from scattering.compare import build_compare_table, build_wavefunction_table
from scattering.run_config import load_run_config
from scattering.solvers.unitary_pt import delta1, delta2
from services.invariant_validator import run_validation
from services.table_writer import format_csv

HALF_PERIOD = [f"scatter.p={math.pi / 2!r}", "potential.eta=0.05", "scatter.methods=unitary1,exact"]


def _data_lines(text):
    return [line for line in text.splitlines() if not line.startswith("#")]


def _column(text, name):
    header, *rows = _data_lines(text)
    index = header.split(",").index(name)
    return [float(row.split(",")[index]) for row in rows]


class TestCompareTable:
    """Tests for build_compare_table."""

    def test_columns(self):
        config = load_run_config(None, HALF_PERIOD)
        table = build_compare_table(config)
        assert table.columns == [
            "p",
            "lambda",
            "kappa",
            "eta",
            "unitary1",
            "exact",
            "diff_unitary1_exact",
            "max_abs_diff",
            "ref_first_order",
            "ref_second_order",
        ]
        assert "p" not in table.angle_columns
        assert "unitary1" in table.angle_columns

    def test_first_order_at_half_period(self):
        table = build_compare_table(load_run_config(None, HALF_PERIOD))
        assert table.column("unitary1")[0] == pytest.approx(-0.05, abs=1e-12)
        assert table.column("ref_first_order")[0] == pytest.approx(-0.05, abs=1e-12)
        assert table.column("eta")[0] == pytest.approx(0.05)

    def test_zero_coupling(self):
        config = load_run_config(None, ["potential.lambda=0", "scatter.methods=unitary1,unitary2,green1,green2,exact"])
        row = build_compare_table(config).rows[0]
        assert row[4:9] == [0.0, 0.0, 0.0, 0.0, 0.0]

    def test_failure_becomes_nan_and_note(self):
        config = load_run_config(None, ["potential.kind=gaussian", "scatter.methods=unitary1,exact"])
        table = build_compare_table(config)
        assert math.isnan(table.column("exact")[0])
        assert math.isfinite(table.column("unitary1")[0])
        assert table.notes and table.notes[0].startswith("row 0 exact:")

    def test_exact_and_numerov_agree_across_branch(self):
        """A deep well drives the phase through pi/2; differences stay small and the exact column stays continuous."""
        overrides = [
            "potential.lambda=-1.5",
            "sweep.axis=p",
            "sweep.start=0.5",
            "sweep.stop=3",
            "sweep.count=26",
            "scatter.methods=exact,numerov",
        ]
        table = build_compare_table(load_run_config(None, overrides))
        exact = table.column("exact")
        assert max(abs(table.column("diff_exact_numerov"))) < 1e-7
        assert max(table.column("max_abs_diff")) < 1e-7
        assert max(abs(exact[1:] - exact[:-1])) < math.pi / 2
        assert min(exact) < -math.pi / 2

    def test_unitary2_is_delta1_plus_delta2(self):
        config = load_run_config(None, ["scatter.p=2", "scatter.methods=unitary1,unitary2"])
        table = build_compare_table(config)
        model = config.build_model(config.potential.coupling)
        expected = delta1(model, 0, 2.0, 1.0).value + delta2(model, 0, 2.0, 1.0, config.quad).value
        assert table.column("unitary2")[0] == pytest.approx(expected, abs=1e-15)
        assert table.column("unitary1")[0] == delta1(model, 0, 2.0, 1.0).value

    def test_rejected_model_becomes_nan_row(self):
        """A barrier sweep through negative couplings keeps the run going."""
        overrides = [
            "potential.kind=barrier",
            "sweep.axis=lambda",
            "sweep.start=-0.1",
            "sweep.stop=0.1",
            "sweep.count=3",
            "scatter.methods=unitary1,exact",
        ]
        table = build_compare_table(load_run_config(None, overrides))
        assert math.isnan(table.column("unitary1")[0])
        assert math.isnan(table.column("exact")[0])
        assert all(math.isfinite(v) for v in table.column("exact")[1:])
        assert table.notes[0].startswith("row 0 model:")
        assert len(table.notes) == 1

    def test_workers_do_not_change_rows(self):
        overrides = ["sweep.axis=p", "sweep.start=1", "sweep.stop=3", "sweep.count=3", "scatter.methods=unitary1,exact"]
        config = load_run_config(None, overrides)
        serial = format_csv(build_compare_table(config, workers=1), config, "compare")
        parallel = format_csv(build_compare_table(config, workers=2), config, "compare")
        assert serial == parallel


class TestOutput:
    """Tests for the CSV and JSON writers through the compare command."""

    def test_deterministic_csv(self):
        config = load_run_config(None, HALF_PERIOD)
        first, second = io.StringIO(), io.StringIO()
        cmd_compare(config, stream=first)
        cmd_compare(config, stream=second)
        assert first.getvalue() == second.getvalue()

    def test_header_hash_matches_config(self):
        config = load_run_config(None, HALF_PERIOD)
        out = io.StringIO()
        cmd_compare(config, stream=out)
        header = [line for line in out.getvalue().splitlines() if line.startswith("# config_hash=")]
        assert header == [f"# config_hash={config.config_hash()}"]
        assert out.getvalue().startswith("# phaseshift ")

    def test_seventeen_digits(self):
        out = io.StringIO()
        cmd_compare(load_run_config(None, HALF_PERIOD), stream=out)
        _, row = _data_lines(out.getvalue())
        assert row.split(",")[0] == f"{math.pi / 2:.17g}"

    def test_degrees_convert_angles_only(self):
        radians = io.StringIO()
        degrees = io.StringIO()
        cmd_compare(load_run_config(None, HALF_PERIOD), stream=radians)
        cmd_compare(load_run_config(None, [*HALF_PERIOD, "output.degrees=true"]), stream=degrees)
        assert _column(degrees.getvalue(), "unitary1")[0] == pytest.approx(math.degrees(-0.05), abs=1e-9)
        assert _column(degrees.getvalue(), "p") == _column(radians.getvalue(), "p")
        assert "# angles=degrees" in degrees.getvalue()

    def test_json_nan_is_null(self):
        config = load_run_config(None, ["potential.kind=gaussian", "scatter.methods=unitary1,exact", "output.format=json"])
        out = io.StringIO()
        cmd_compare(config, stream=out)
        document = json.loads(out.getvalue())
        assert document["config_hash"] == config.config_hash()
        exact = document["columns"].index("exact")
        assert document["rows"][0][exact] is None
        assert document["notes"]

    def test_output_file_and_banner(self, tmp_path, capsys):
        path = tmp_path / "out.csv"
        assert main(["compare", *sum((["--set", s] for s in HALF_PERIOD), []), "--output", str(path)]) == 0
        assert path.read_text(encoding="utf-8").startswith("# phaseshift ")
        assert "Compare Complete" in capsys.readouterr().out


class TestWavefunction:
    """Tests for the wavefunction table."""

    def test_columns(self):
        config = load_run_config(None, ["scatter.p=2", "scatter.methods=unitary1,green1,exact", "output.r_points=41", "output.r_max=4"])
        table = build_wavefunction_table(config)
        assert table.columns == ["r", "y_free", "y_unitary1", "y_green1"]
        assert len(table.rows) == 41
        assert table.rows[0][:2] == [0.0, 0.0]

    def test_green_matches_unitary_outside(self):
        """Both first-order wavefunctions equal ybar + delta1 sqrt(2/pi) cos(pr) beyond R."""
        config = load_run_config(
            None, ["scatter.p=2", "scatter.methods=unitary1,green1", "output.r_points=41", "output.r_max=4"]
        )
        table = build_wavefunction_table(config)
        r = table.column("r")
        outside = r > 1.0
        assert max(abs(table.column("y_unitary1")[outside] - table.column("y_green1")[outside])) < 2e-7

    def test_coarse_output_radii(self):
        """Few output points over a long range are filled from a resolved internal grid."""
        config = load_run_config(
            None, ["scatter.p=2", "scatter.methods=unitary1,green1,numerov", "output.r_points=21", "output.r_max=20"]
        )
        table = build_wavefunction_table(config)
        assert table.notes == []
        r = table.column("r")
        assert len(r) == 21
        outside = r > 1.0
        for name in ("y_unitary1", "y_green1", "y_numerov"):
            assert all(math.isfinite(v) for v in table.column(name))
        assert max(abs(table.column("y_unitary1")[outside] - table.column("y_green1")[outside])) < 2e-7

    def test_sweep_rejected(self):
        config = load_run_config(None, ["sweep.axis=p", "sweep.start=1", "sweep.stop=2", "sweep.count=2"])
        with pytest.raises(ValueError):
            build_wavefunction_table(config)

    def test_command_writes_csv(self):
        out = io.StringIO()
        config = load_run_config(None, ["scatter.p=2", "scatter.methods=numerov", "output.r_points=41", "output.r_max=4"])
        assert cmd_wavefunction(config, stream=out) == 0
        assert _data_lines(out.getvalue())[0] == "r,y_free,y_numerov"


class TestValidate:
    """Tests for the invariant validator and its exit status."""

    def test_default_config_passes(self):
        results = run_validation(load_run_config())
        failed = [r.name for r in results if not r.passed]
        assert failed == []
        names = {r.name for r in results}
        assert {"kernel symmetry", "discrete unitarity", "delta1 closed form"} <= names
        assert {
            "second-order generator identity (relative)",
            "PV linearity and parity",
            "free solution wronskian 2k/pi (relative)",
            "wronskian vs asymptotic fit",
            "fit phase window and scale invariance",
            "numerov x16 on step halving",
            "wavefunction fit vs delta1 over kappa",
        } <= names

    def test_corrupted_symmetry_fails(self):
        config = load_run_config(None, ["validate.corrupt_kernel_symmetry=true"])
        results = {r.name: r for r in run_validation(config)}
        assert results["kernel symmetry"].passed is False
        assert results["kernel symmetry"].residual == pytest.approx(1e-3, rel=1e-6)

    def test_exit_status(self, capsys):
        assert main(["validate"]) == 0
        assert main(["validate", "--set", "validate.corrupt_kernel_symmetry=true"]) == 1
        out = capsys.readouterr().out
        assert "❌ FAIL: kernel symmetry" in out
        assert "Total:" in out

    def test_large_kappa_checks_included(self):
        config = load_run_config(None, ["scatter.p=10", "potential.eta=0.05"])
        names = {r.name for r in run_validation(config)}
        assert {
            "delta2 closed form",
            "eta series c1 vs delta1",
            "eta series c2 vs delta2",
            "green vs unitary second order",
            "exact - second order x8 on halving eta",
        } <= names

    def test_large_kappa_checks_pass(self):
        results = run_validation(load_run_config(None, ["scatter.p=10", "potential.eta=0.05"]))
        assert [r.name for r in results if not r.passed] == []


class TestExitCodes:
    """Configuration problems exit with status 2."""

    def test_bad_key(self, capsys):
        assert main(["compare", "--set", "potential.depth=3"]) == 2
        assert "Config error" in capsys.readouterr().err

    def test_wavefunction_sweep(self):
        assert main(["wavefunction", "--set", "sweep.axis=p", "--set", "sweep.start=1", "--set", "sweep.stop=2",
                     "--set", "sweep.count=2"]) == 2

    def test_missing_subcommand(self):
        with pytest.raises(SystemExit):
            main([])
