from functools import lru_cache

import numpy as np
import pytest

from dgtau.mesh import build_cartesian_mesh
from dgtau.operator import exact_solution
from dgtau.solver import solve_steady


@lru_cache(maxsize=None)
def reference_solution():
    """Converged order-(5,5) solution of the manufactured case on the 4x4 mesh."""
    mesh = build_cartesian_mesh(4, 4, (5, 5))
    Q, report = solve_steady(mesh, exact_solution(mesh), tolerance=1e-10)
    return mesh, Q, report


@pytest.fixture(scope="session")
def reference():
    return reference_solution()


@pytest.fixture(scope="session")
def peak(reference):
    mesh, _, _ = reference
    return mesh.locate(0.5, 0.5)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import REPORT
    if REPORT:
        terminalreporter.section("acceptance criteria")
        for line in sorted(REPORT, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)


def pytest_collection_modifyitems(items):
    for item in items:
        if "reference" in getattr(item, "fixturenames", ()) or item.module.__name__ == "test_acceptance":
            item.add_marker(pytest.mark.slow)
