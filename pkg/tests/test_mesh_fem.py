from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glvortex import curves, mesh_fem as mf
from glvortex.errors import MeshFailure, TooCloseToBoundary


@pytest.fixture(scope="module")
def coarse_disk():
    return mf.mesh_curve(curves.circle(1.0), 0.08)


@pytest.fixture(scope="module")
def coarse_square():
    return mf.mesh_curve(curves.square(1.0), 0.05)


def test_disk_mesh_quality_and_area():
    m = mf.mesh_curve(curves.circle(1.0), 0.05)
    assert m.min_angle >= 20.0
    assert np.all(m.signed_areas > 0)
    poly = m.boundary_polyline
    poly_area = 0.5 * np.sum(poly.real * np.roll(poly.imag, -1) - np.roll(poly.real, -1) * poly.imag)
    assert abs(m.area - poly_area) < 1e-12
    # inscribed polygon with edge h loses about pi h^2 / 6
    assert abs(m.area - math.pi) < 1.5e-3
    edges = np.abs(np.roll(poly, -1) - poly)
    assert edges.max() <= 0.05 + 1e-12
    # Euler characteristic of a disk
    tri = m.triangles
    e = np.unique(np.sort(np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]]), axis=1), axis=0)
    assert m.n_vertices - len(e) + len(tri) == 1


def test_square_area_is_exact(coarse_square):
    assert abs(coarse_square.area - 1.0) < 1e-12


def test_max_area_bound_is_honoured_at_small_h():
    m = mf.mesh_curve(curves.circle(1.0), 0.02)
    assert m.signed_areas.max() <= math.sqrt(3) / 4 * 0.02 ** 2 * (1 + 1e-9)


def test_boundary_parameter_matches_curve(coarse_disk):
    m = coarse_disk
    x = m.vertices[m.boundary_loop]
    assert np.max(np.abs(curves.circle(1.0).param(m.boundary_param) - x)) < 1e-3


def test_log_spiral_mesh():
    m = mf.mesh_curve(curves.log_spiral_curve(0.05, 0.002), 0.02)
    assert m.min_angle >= 20.0
    assert m.n_vertices > 500


def test_short_polyline_rejected():
    with pytest.raises(MeshFailure):
        mf.triangulate(np.exp(2j * np.pi * np.arange(8) / 8), 0.1)


def test_stiffness_and_mass_invariants(coarse_disk):
    m = coarse_disk
    K = m.stiffness
    assert abs(K - K.T).max() < 1e-12
    assert np.max(np.abs(K @ np.ones(m.n_vertices))) < 1e-12
    assert abs(m.lumped_mass.sum() - m.area) < 1e-12
    rng = np.random.default_rng(0)
    v = rng.normal(size=m.n_vertices)
    assert v @ (K @ v) >= 0


@settings(max_examples=20, deadline=None)
@given(a=st.floats(-3, 3), b=st.floats(-3, 3), c=st.floats(-3, 3))
def test_linear_fields_are_exact(a, b, c):
    m = mf.mesh_curve(curves.circle(1.0), 0.1)
    x = m.vertices
    u = (a * x.real + b * x.imag + c).astype(complex)
    assert abs(mf.dirichlet_energy(m, u) - 0.5 * (a * a + b * b) * m.area) < 1e-9 * (1 + a * a + b * b)
    sol = mf.solve_laplace_dirichlet(m, u[m.boundary_loop])
    assert np.max(np.abs(sol.values - u)) < 1e-8 * (1 + abs(a) + abs(b) + abs(c))
    pts = np.array([0.1 + 0.2j, -0.5j, 0.3])
    assert np.allclose(m.interpolate(u.real, pts), a * pts.real + b * pts.imag + c)


def test_harmonic_extension_converges_quadratically():
    errs = []
    for h in (0.1, 0.05):
        m = mf.mesh_curve(curves.circle(1.0), h)
        exact = m.vertices ** 2
        sol = mf.solve_laplace_dirichlet(m, exact[m.boundary_loop])
        errs.append(np.max(np.abs(sol.values - exact)))
    assert errs[1] < errs[0] / 2.5


def test_gl_energy_of_unit_constant_is_zero(coarse_disk):
    u = np.full(coarse_disk.n_vertices, np.exp(0.4j))
    e = mf.gl_energy(coarse_disk, u, 0.1)
    assert abs(e.total) < 1e-12 and abs(e.potential_part) < 1e-12


def test_potential_energy_of_zero_field(coarse_disk):
    e = mf.gl_energy(coarse_disk, np.zeros(coarse_disk.n_vertices, dtype=complex), 0.5)
    assert abs(e.potential_part - coarse_disk.area / (4 * 0.25)) < 1e-12
    assert e.total == e.dirichlet_part + e.potential_part


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 1.0))
def test_gradient_matches_finite_differences(seed, eps):
    m = mf.mesh_curve(curves.circle(1.0), 0.15)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=m.n_vertices) + 1j * rng.normal(size=m.n_vertices)
    d = rng.normal(size=m.n_vertices) + 1j * rng.normal(size=m.n_vertices)
    t = 1e-6
    fd = (mf.gl_energy(m, u + t * d, eps).total - mf.gl_energy(m, u - t * d, eps).total) / (2 * t)
    an = float(np.real(np.vdot(mf.gl_gradient_values(m, u, eps), d)))
    assert abs(fd - an) <= 1e-5 * abs(an)


def test_gradient_field_vanishes_on_dirichlet_nodes(coarse_disk):
    u = mf.P1Field(np.ones(coarse_disk.n_vertices, dtype=complex) * 0.5, coarse_disk.boundary_mask.copy())
    g = mf.gl_gradient(coarse_disk, u, 0.2)
    assert np.all(g.values[coarse_disk.boundary_mask] == 0)
    assert np.any(g.values[coarse_disk.interior] != 0)


def test_green_mass_converges_to_closed_form():
    exact = -math.log(0.91)
    errs = [abs(mf.green_dirichlet_fem(mf.mesh_curve(curves.circle(1.0), h), 0.3).mass - exact)
            for h in (0.04, 0.02)]
    assert errs[1] < 5e-3 and errs[1] < errs[0]


def test_green_mass_is_symmetric_on_square(coarse_square):
    m = coarse_square
    c = 0.0
    p = 0.2 + 0.1j
    masses = [mf.green_dirichlet_fem(m, c + p * w).mass for w in (1, 1j, -1, -1j)]
    assert max(masses) - min(masses) < 2e-3


def test_green_pole_near_boundary_rejected(coarse_disk):
    with pytest.raises(TooCloseToBoundary):
        mf.green_dirichlet_fem(coarse_disk, 0.9)
    with pytest.raises(TooCloseToBoundary):
        mf.green_dirichlet_fem(coarse_disk, 2.0)


def test_json_round_trip(coarse_disk):
    m = mf.TriMesh.from_json(coarse_disk.to_json())
    assert np.allclose(m.vertices, coarse_disk.vertices)
    assert np.array_equal(m.triangles, coarse_disk.triangles)
    assert np.array_equal(m.boundary_loop, coarse_disk.boundary_loop)
    f = mf.P1Field(coarse_disk.vertices ** 2, coarse_disk.boundary_mask)
    g = mf.P1Field.from_json(f.to_json())
    assert np.allclose(g.values, f.values) and np.array_equal(g.dirichlet_mask, f.dirichlet_mask)
