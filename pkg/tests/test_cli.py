import json

import numpy as np
import pytest

from vring import io
from vring.cli import RunConfig, main, parse_config_file


def _run(args, capsys):
    code = main(args)
    out, err = capsys.readouterr()
    return code, out, err


def test_solve_writes_solution_and_boundary(tmp_path, capsys):
    code, out, _ = _run(["solve", "--kappa", "12.566", "--W", "1", "--eps", "0.05", "--output-dir", str(tmp_path)],
                        capsys)
    assert code == 0
    assert json.loads(out)["files"] == ["solution.json", "boundary.csv", "report.json"]
    sol = io.read_solution(tmp_path / "solution.json")
    assert sol.params.kappa == 12.566
    assert sol.final_update < 1e-10 * sol.core.s
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["solution"]["convex"] is True


def test_config_file_merging(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# settings\neps = 0.1\nnodes = 128\ntol=1e-9\n")
    code, _, _ = _run(["solve", "--config", str(cfg), "--nodes", "96", "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["config"]["eps"] == 0.1
    assert report["config"]["nodes"] == 96
    assert report["config"]["tol"] == 1e-9


def test_config_validation():
    with pytest.raises(Exception):
        RunConfig(sweep_eps=[0.05, 0.1])
    with pytest.raises(Exception):
        RunConfig(tol=0.0)
    assert RunConfig().kappa == pytest.approx(4 * np.pi)


def test_parse_config_file_errors(tmp_path):
    from vring.errors import ConfigError

    (tmp_path / "bad.cfg").write_text("eps 0.1\n")
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "bad.cfg")
    with pytest.raises(ConfigError):
        parse_config_file(tmp_path / "missing.cfg")


@pytest.mark.parametrize("args, code", [
    (["solve", "--eps", "2"], 2),
    (["solve", "--bogus", "1"], 2),
    (["solve", "--nodes", "many"], 2),
    (["sweep", "--eps", "0.05,0.1"], 2),
    (["solve", "--eps", "0.25"], 3),
])
def test_error_exit_codes(args, code, tmp_path, capsys):
    got, _, err = _run(args + ["--output-dir", str(tmp_path)], capsys)
    assert got == code
    record = json.loads(err)
    assert record["exit_code"] == code


def test_unwritable_output_dir(tmp_path, capsys):
    blocker = tmp_path / "file"
    blocker.write_text("")
    got, _, err = _run(["solve", "--output-dir", str(blocker / "sub")], capsys)
    assert got == 4
    assert json.loads(err)["error"] == "OutputError"


def test_sweep_is_deterministic_across_worker_counts(tmp_path, capsys, monkeypatch):
    a, b = tmp_path / "a", tmp_path / "b"
    assert _run(["sweep", "--eps", "0.1,0.05", "--output-dir", str(a)], capsys)[0] == 0
    monkeypatch.setenv("VRING_WORKERS", "2")
    assert _run(["sweep", "--eps", "0.1,0.05", "--output-dir", str(b)], capsys)[0] == 0
    assert (a / "sweep.csv").read_bytes() == (b / "sweep.csv").read_bytes()
    cols = io.read_csv(a / "sweep.csv")
    assert list(cols) == list(io.SWEEP_COLUMNS)
    report = json.loads((a / "report.json").read_text())
    assert "kh_residual" in report["fitted_order"]


def test_kelvin_hicks_and_pohozaev_commands(tmp_path, capsys):
    assert _run(["kelvin-hicks", "--eps", "0.1,0.05", "--output-dir", str(tmp_path)], capsys)[0] == 0
    kh = io.read_csv(tmp_path / "kelvin_hicks.csv")
    assert np.all(np.abs(kh["kh_normalized"]) < 1.0)
    assert _run(["pohozaev", "--eps", "0.1", "--output-dir", str(tmp_path)], capsys)[0] == 0
    terms = io.read_csv(tmp_path / "pohozaev.csv")
    assert np.all(terms["gap"] < 1e-6)


def test_evolve_at_zero_amplitude(tmp_path, capsys):
    code, _, _ = _run(["evolve", "--eps", "0.05", "--amplitude", "0", "--turnovers", "0.5",
                       "--output-dir", str(tmp_path)], capsys)
    assert code == 0
    trace = io.read_csv(tmp_path / "trace.csv")
    assert list(trace) == list(io.TRACE_COLUMNS)
    report = json.loads((tmp_path / "report.json").read_text())
    assert np.max(trace["metric"]) < 1e-6 * report["initial_scale"]


def test_maximize_command(tmp_path, capsys):
    assert _run(["maximize", "--eps", "0.05", "--output-dir", str(tmp_path)], capsys)[0] == 0
    log = io.read_csv(tmp_path / "ascent.csv")
    assert list(log) == list(io.ASCENT_COLUMNS)
    assert np.all(np.diff(log["augmented"]) >= -1e-9 * np.abs(log["augmented"][1:]))


def test_verify_is_seeded(tmp_path, capsys):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert _run(["verify", "--samples", "50", "--pairs", "5", "--seed", "3", "--output-dir", str(d)],
                    capsys)[0] == 0
    assert (a / "verify.csv").read_bytes() == (b / "verify.csv").read_bytes()
    report = json.loads((a / "report.json").read_text())
    assert report["gstar_max_rel_error"] < 1e-10
    assert report["continuity_max_ratio"] < 1.0
