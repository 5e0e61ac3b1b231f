from __future__ import annotations

import warnings

import pytest

from glvortex import curves, gl_solver, mesh_fem

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def disk_mesh():
    return mesh_fem.mesh_curve(curves.circle(1.0), 0.02)


@pytest.fixture(scope="session")
def disk_continuation(disk_mesh):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return gl_solver.continuation(disk_mesh, curves.tangent_data(curves.circle(1.0)))
