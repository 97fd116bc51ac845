import csv

import numpy as np
import pytest

from dgtau.mesh import build_cartesian_mesh
from dgtau.operator import constant_solution, discretization, exact_solution
from dgtau.solver import discretization_error, solve_steady, stable_time_step


def test_small_case_converges_and_writes_history(tmp_path):
    mesh = build_cartesian_mesh(2, 2, (2, 2))
    path = tmp_path / "h.csv"
    Q, rep = solve_steady(mesh, exact_solution(mesh), tolerance=1e-8, history_csv=str(path))
    assert rep.converged
    assert rep.final_residual_inf <= 1e-8
    rows = list(csv.reader(open(path)))
    assert rows[0] == ["iteration", "residual_inf"]
    assert len(rows) == rep.iterations + 2
    assert float(rows[-1][1]) == pytest.approx(rep.final_residual_inf, rel=1e-9)


def test_iteration_budget_reports_non_convergence():
    mesh = build_cartesian_mesh(2, 2, (3, 3))
    _, rep = solve_steady(mesh, exact_solution(mesh), tolerance=1e-14, max_iterations=5)
    assert not rep.converged
    assert rep.iterations == 5


def test_rejects_bad_tolerance():
    mesh = build_cartesian_mesh(1, 1, (2, 2))
    with pytest.raises(ValueError):
        solve_steady(mesh, exact_solution(mesh), tolerance=0.0)


def test_time_step_shrinks_with_order():
    dts = []
    for n in (2, 4, 8):
        mesh = build_cartesian_mesh(2, 2, (n, n))
        d = discretization(mesh)
        dts.append(stable_time_step(d, d.pack(exact_solution(mesh)), 1.0))
    assert dts[0] > dts[1] > dts[2] > 0


def test_discretization_error_of_exact_samples_is_interpolation_error():
    mesh = build_cartesian_mesh(2, 2, (8, 8))
    err = discretization_error(exact_solution(mesh), mesh)
    assert err.l2 < 1e-3
    mesh_c = mesh.with_orders((2, 2))
    assert discretization_error(exact_solution(mesh_c), mesh_c).l2 > 10 * err.l2


def test_discretization_error_of_constant():
    mesh = build_cartesian_mesh(2, 2, (3, 3))
    state = np.array([1.0, 0.0, 0.0, 2.5])
    err = discretization_error(constant_solution(mesh, state), mesh,
                               exact=lambda x, y, gas: np.broadcast_to(
                                   state.reshape(4, 1, 1), (4,) + np.shape(x)))
    assert err.linf < 1e-14
