import numpy as np
import pytest

from dgtau.cli import OUTPUT_ENV, ConfigError, RunConfig, load_config, main
from dgtau.mesh import build_cartesian_mesh
from dgtau.operator import exact_solution
from dgtau.snapshot import read_solution, write_solution


@pytest.fixture
def out(tmp_path, monkeypatch):
    monkeypatch.setenv(OUTPUT_ENV, str(tmp_path / "env-out"))
    return tmp_path


@pytest.fixture
def snapshot(tmp_path):
    mesh = build_cartesian_mesh(2, 2, (4, 4))
    path = tmp_path / "ref.txt"
    write_solution(path, mesh, exact_solution(mesh))
    return path


def test_snapshot_round_trip(tmp_path):
    mesh = build_cartesian_mesh(2, 1, [(2, 3), (4, 1)])
    Q = exact_solution(mesh)
    write_solution(tmp_path / "s.txt", mesh, Q)
    mesh2, Q2 = read_solution(tmp_path / "s.txt")
    assert mesh2.orders == mesh.orders
    for a, b in zip(Q, Q2):
        np.testing.assert_array_equal(a, b)
    assert (tmp_path / "s.txt").read_text().startswith("dgtau-solution 1\n")


def test_snapshot_rejects_other_versions(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("dgtau-solution 9\nmesh 1 1\n")
    with pytest.raises(ValueError):
        read_solution(p)


def test_verify_source_pass_and_negative_control(out, capsys):
    assert main(["verify-source"]) == 0
    assert capsys.readouterr().out.startswith("PASS: 100 points")
    assert main(["verify-source", "--flip-exponent"]) == 3
    assert "FAIL" in capsys.readouterr().out


@pytest.mark.parametrize("argv", [["solve", "--p1", "0"], ["nonsense"], ["adapt"],
                                  ["sweep", "--thresholds", "1e-3,-1"],
                                  ["map", "--n-min", "4", "--n-max", "2"]])
def test_invalid_input_exit_code(out, argv):
    assert main(argv) == 1


def test_config_file_and_overrides(tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("nx = 2  # comment\nthresholds = 1e-3, 1e-5\nflavor = non_isolated\n")
    vals = load_config(str(cfg))
    assert vals == {"nx": 2, "thresholds": [1e-5, 1e-3], "flavor": "non_isolated"}
    bad = tmp_path / "bad.cfg"
    bad.write_text("colour = blue\n")
    with pytest.raises(ConfigError):
        load_config(str(bad))


def test_defaults_match_validation_study():
    c = RunConfig()
    assert (c.nx, c.ny, c.p1, c.p2, c.tolerance, c.n_min, c.n_max) == (4, 4, 5, 5, 1e-10, 1, 10)
    assert c.thresholds[0] == pytest.approx(1e-7) and c.thresholds[-1] == pytest.approx(1e-1)


def test_solve_non_convergence_exit_code(out):
    rc = main(["solve", "--nx", "2", "--ny", "2", "--p1", "2", "--p2", "2",
               "--max-iterations", "3", "--output-dir", str(out / "o")])
    assert rc == 2
    assert (out / "o" / "solution.txt").exists()
    assert (out / "o" / "history.csv").exists()


def test_env_var_sets_output_dir(out, snapshot):
    assert main(["adapt", "--solution", str(snapshot), "--tau-max", "1e-4"]) == 0
    lines = (out / "env-out" / "plan.csv").read_text().splitlines()
    assert lines[0] == "element_id,N1,N2,dofs,predicted_tau"
    assert len(lines) == 5


def test_map_output_is_deterministic(out, snapshot):
    a, b = out / "a", out / "b"
    for d in (a, b):
        assert main(["map", "--solution", str(snapshot), "--element", "3", "--no-exact",
                     "--output-dir", str(d)]) == 0
    assert (a / "maps.csv").read_bytes() == (b / "maps.csv").read_bytes()
    text = (a / "maps.csv").read_text()
    assert "high_order" in text and "low_order" in text and "full_product" in text


def test_sweep_writes_table(out, snapshot):
    assert main(["sweep", "--solution", str(snapshot), "--thresholds", "1e-4,1e-2",
                 "--method", "low_order"]) == 0
    rows = (out / "env-out" / "sweep.csv").read_text().splitlines()
    assert rows[0].startswith("tau_max,total_dofs,achieved_non_isolated")
    assert len(rows) == 3
