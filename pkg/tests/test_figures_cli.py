import math

import numpy as np
import pytest
from click.testing import CliRunner

from fadeout import figures
from fadeout.cli import EXIT_INVALID_SPEC, EXIT_NUMERICAL_FAILURE, main
from fadeout.errors import OutOfDomainError


def test_default_n_grid_is_log_spaced_and_unique():
    grid = figures.default_n_grid(50, 1000)
    assert grid[0] == 50 and grid[-1] == 1000
    assert len(grid) == len(set(grid)) <= 20
    assert all(a < b for a, b in zip(grid, grid[1:]))


def test_run_spec_rejects_unknown_figure():
    with pytest.raises(OutOfDomainError):
        figures.RunSpec(figure="fig3")


def test_hand_case_exact_column():
    spec = figures.RunSpec(figure="fig1", n_grid=(2,), i_grid=(1, 2),
                           methods=("Exact",))
    data = figures.compute_figure(spec)
    assert data.columns == ("i", "Exact(2)")
    assert abs(data.rows[0][1] - 1.2) < 1e-12
    assert abs(data.rows[1][1] - 1.7) < 1e-12
    text = data.to_csv_text()
    lines = text.split("\n")
    assert lines[0].startswith("# params: figure=fig1 beta=0.8 gamma=1.0 k=1")
    assert lines[1] == "i,Exact(2)"
    assert lines[2] == "1,1.20000000000e+00"
    assert "\r" not in text and text.endswith("\n")


def test_csv_is_byte_identical_across_reruns():
    spec = figures.RunSpec(figure="fig8")
    assert (figures.compute_figure(spec).to_csv_text()
            == figures.compute_figure(spec).to_csv_text())


def test_exact_column_goes_na_beyond_the_cutoff():
    spec = figures.RunSpec(figure="fig12", n_grid=(60, 350),
                           methods=("Exact",))
    data = figures.compute_figure(spec)
    assert data.rows[0][1] is not None
    assert data.rows[1][1] is None
    body = data.to_csv_text().split("\n")
    assert body[3] == "350,NA"


def test_method_filter_rejects_unknown_methods():
    with pytest.raises(OutOfDomainError):
        figures.compute_figure(figures.RunSpec(figure="fig8",
                                               methods=("Exact",)))


def test_fig8_grid_and_ordering():
    data = figures.compute_figure(figures.RunSpec(figure="fig8"))
    assert data.columns == ("R0", "AD(18)", "FPE")
    assert len(data.rows) == 100
    assert math.isclose(data.rows[-1][0], 3.0)
    assert all(row[2] < row[1] for row in data.rows)  # FPE below the action


def test_fig2_uses_i_equals_one_and_fig4_scales_with_n():
    small = figures.RunSpec(figure="fig2", n_grid=(100,), methods=("Lin",))
    v2 = figures.compute_figure(small).rows[0][1]
    small4 = figures.RunSpec(figure="fig4", n_grid=(100,), methods=("Lin",))
    v4 = figures.compute_figure(small4).rows[0][1]
    from fadeout.formulas import tau_lin
    from fadeout.model import ModelParams
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=100)
    assert abs(v2 - tau_lin(p, 1)) < 1e-12
    assert abs(v4 - tau_lin(p, 30)) < 1e-12


def test_evaluate_method_dispatch():
    from fadeout.model import ModelParams
    p = ModelParams(beta=0.8, gamma=1.0, n_pop=2)
    est = figures.evaluate_method("Exact", p, i=1)
    assert abs(est.value - 1.2) < 1e-12
    with pytest.raises(OutOfDomainError):
        figures.evaluate_method("nope", p)


# ---------------------------------------------------------------------------
# command-line interface
# ---------------------------------------------------------------------------

def test_cli_writes_figure_csv(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["run", "--figure", "fig1",
                                  "--n-grid", "2", "--i-grid", "1,2",
                                  "--methods", "Exact",
                                  "--out", str(tmp_path)])
    assert result.exit_code == 0, result.output
    out = tmp_path / "fig1.csv"
    assert str(out) in result.output
    lines = out.read_text().split("\n")
    assert lines[2] == "1,1.20000000000e+00"


def test_cli_shorthand_matches_run(tmp_path):
    runner = CliRunner()
    a = tmp_path / "a"
    b = tmp_path / "b"
    args = ["--n-grid", "2", "--i-grid", "1,2", "--methods", "Exact"]
    assert runner.invoke(main, ["fig1", *args, "--out", str(a)]).exit_code == 0
    assert runner.invoke(main, ["run", "--figure", "fig1", *args,
                                "--out", str(b)]).exit_code == 0
    assert (a / "fig1.csv").read_bytes() == (b / "fig1.csv").read_bytes()


def test_cli_eval_prints_key_value_lines():
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--method", "Exact",
                                  "--beta", "0.8", "--n", "2", "--i", "1"])
    assert result.exit_code == 0
    fields = dict(line.split("=", 1) for line in
                  result.output.strip().split("\n"))
    assert fields["method"] == "Exact"
    assert abs(float(fields["value"]) - 1.2) < 1e-12


def test_cli_invalid_spec_exits_2():
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--method", "Exact",
                                  "--beta", "-1.0", "--n", "10"])
    assert result.exit_code == EXIT_INVALID_SPEC
    assert "invalid spec" in result.output


def test_cli_unknown_method_exits_2(tmp_path):
    runner = CliRunner()
    result = runner.invoke(main, ["fig8", "--methods", "Exact",
                                  "--out", str(tmp_path)])
    assert result.exit_code == EXIT_INVALID_SPEC


def test_cli_numerical_failure_exits_3():
    # the closed-form accumulation overflows at this size, which must be
    # reported as a numerical failure naming the method
    runner = CliRunner()
    result = runner.invoke(main, ["eval", "--method", "Exact",
                                  "--beta", "1.6", "--n", "50000", "--i", "1"])
    assert result.exit_code == EXIT_NUMERICAL_FAILURE
    assert "numerical failure" in result.output
