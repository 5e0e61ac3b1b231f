from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import solve_bvp

from glvortex import curves, gl_solver as gs, mesh_fem as mf


@pytest.fixture(scope="module")
def coarse_disk():
    return mf.mesh_curve(curves.circle(1.0), 0.05)


def _radial_profile(eps: float):
    """Degree-one radial profile: f'' + f'/r - f/r^2 + f(1 - f^2)/eps^2 = 0, f(0)=0, f(1)=1."""
    r0 = 1e-4

    def rhs(r, y):
        f, fp = y
        return np.vstack([fp, -fp / r + f / r ** 2 - f * (1 - f ** 2) / eps ** 2])

    r = np.linspace(r0, 1.0, 400)
    guess = np.vstack([np.tanh(r / eps), 1 / eps / np.cosh(r / eps) ** 2])
    sol = solve_bvp(rhs, lambda a, b: np.array([a[0] - a[1] * r0, b[0] - 1.0]), r, guess, tol=1e-8, max_nodes=100000)
    assert sol.success
    return sol.sol


def _synthetic(mesh, values, eps):
    fld = mf.P1Field(np.asarray(values, dtype=complex), mesh.boundary_mask.copy())
    return gs.GLSolution(mesh, fld, eps, mf.gl_energy(mesh, fld.values, eps), 0, True, 0.0)


def test_config_validation():
    with pytest.raises(ValueError):
        gs.GLConfig(eps_schedule=(0.1, 0.2))
    with pytest.raises(ValueError):
        gs.GLConfig(eps_schedule=())
    with pytest.raises(ValueError):
        gs.GLConfig(init="random")


@settings(max_examples=15, deadline=None)
@given(seed=st.integers(0, 10_000), eps=st.floats(0.05, 1.0))
def test_line_quartic_is_exact(seed, eps):
    m = mf.mesh_curve(curves.circle(1.0), 0.2)
    rng = np.random.default_rng(seed)
    u = rng.normal(size=m.n_vertices) + 1j * rng.normal(size=m.n_vertices)
    d = rng.normal(size=m.n_vertices) + 1j * rng.normal(size=m.n_vertices)
    c1, c2, c3, c4 = gs._quartic_coefficients(m, u, d, m.stiffness @ u, eps)
    e0 = mf.gl_energy(m, u, eps).total
    for t in (0.1, -0.37, 1.3):
        poly = ((c4 * t + c3) * t + c2) * t * t + c1 * t
        assert abs(mf.gl_energy(m, u + t * d, eps).total - e0 - poly) <= 1e-9 * (1 + abs(e0))


def test_quartic_minimizer():
    # (t - 1)^2 (t^2 + 1) - 1 has its global minimum at t = 1
    t = gs._quartic_min(-2.0, 2.0, -2.0, 1.0)
    assert abs(t - 1.0) < 1e-9
    assert gs._quartic_min(1.0, 1.0, 0.0, 1.0) == 0.0


def test_minimize_is_monotone_and_keeps_boundary(coarse_disk):
    data = curves.power_data(1, 0.0, 0.3, 2)
    init = gs.harmonic_init(coarse_disk, data)
    sol = gs.minimize(coarse_disk, data, 0.2, gs.GLConfig(eps_schedule=(0.2,)), init)
    assert sol.converged
    assert np.all(np.diff(sol.history) <= 1e-12 * abs(sol.history[0]))
    b = coarse_disk.boundary_loop
    assert np.array_equal(sol.values[b], init.values[b])
    assert gs.el_residual(sol) <= 1e-8
    assert gs.max_modulus_check(sol) <= 1 + 1e-6


def test_degree_zero_data_has_no_vortex(coarse_disk):
    data = curves.power_data(0, 0.5, 0.3, 2)
    sol = gs.minimize(coarse_disk, data, 0.15)
    assert gs.bad_disks(sol).count == 0
    assert np.min(np.abs(sol.values)) > 0.8


def test_radial_profile_oracle(disk_continuation):
    sol = disk_continuation.solutions[0]
    assert sol.eps == 0.2
    prof = _radial_profile(sol.eps)
    r = np.abs(sol.mesh.vertices)
    err = np.max(np.abs(np.abs(sol.values) - prof(np.maximum(r, 1e-4))[0]))
    assert err < 1e-2


def test_rotation_equivariance(disk_continuation):
    sol = disk_continuation.solutions[-1]
    m = sol.mesh
    x = 0.6 * np.exp(2j * np.pi * np.arange(24) / 24)
    alpha = 0.9
    lhs = m.interpolate(sol.values, np.exp(1j * alpha) * x)
    rhs = np.exp(1j * alpha) * m.interpolate(sol.values, x)
    assert np.max(np.abs(lhs - rhs)) < 2e-2


def test_disk_continuation_properties(disk_continuation):
    res = disk_continuation
    final = res.reports[-1]
    assert final.count == 1
    assert abs(final.clusters[0].center) <= 2 * 0.02
    assert all(s.converged for s in res.solutions)
    assert all(gs.max_modulus_check(s) <= 1 + 1e-6 for s in res.solutions)
    gap = gs.log_energy_gap(res.solutions)
    assert gap.bounded and gap.spread <= 1.0 and gap.potential_ratio <= 5.0
    ok, margin = gs.boundary_clearance_check(final, final.eps)
    assert ok and margin >= 5.0
    energies = [s.energy.total for s in res.solutions]
    assert energies == sorted(energies)
    assert len(res.to_json()["stages"]) == 3


def test_energy_quantum_is_stable_across_eps(disk_continuation):
    q = [gs.energy_quantum(s, r.clusters[0].center, s.eps) for s, r in
         zip(disk_continuation.solutions, disk_continuation.reports)]
    assert min(q) > 0.1
    assert max(q) / min(q) < 3.0
    # away from the core the potential decays quickly as eps shrinks
    far = [gs.energy_quantum(s, 0.0, 1.0) - gs.energy_quantum(s, 0.0, 0.7) for s in disk_continuation.solutions]
    assert far[2] < far[1] < far[0]


def test_bad_disks_on_synthetic_two_vortex_field():
    m = mf.mesh_curve(curves.circle(1.0), 0.03)
    eps = 0.05
    a1, a2 = 0.4 + 0.1j, -0.3 - 0.2j
    x = m.vertices

    def core(z, a):
        d = z - a
        return d / np.abs(d) * np.tanh(np.abs(d) / eps)

    rep = gs.bad_disks(_synthetic(m, core(x, a1) * core(x, a2), eps))
    assert rep.count == 2
    centers = sorted((c.center for c in rep.clusters), key=lambda c: c.real)
    assert abs(centers[0] - a2) < 0.03 and abs(centers[1] - a1) < 0.03
    assert all(c.radius == 5 * eps for c in rep.clusters)


def test_clearance_check_flags_vortex_near_boundary():
    m = mf.mesh_curve(curves.circle(1.0), 0.03)
    eps = 0.05
    a = 0.97
    d = m.vertices - a
    rep = gs.bad_disks(_synthetic(m, d / np.abs(d) * np.tanh(np.abs(d) / eps), eps))
    ok, margin = gs.boundary_clearance_check(rep, eps)
    assert rep.count == 1 and not ok and margin < 1.0
    assert gs.boundary_clearance_check(gs.BadDiskReport([], math.inf, eps, 1.0), eps) == (True, math.inf)


def test_energy_gap_needs_two_eps(disk_continuation):
    with pytest.raises(ValueError):
        gs.log_energy_gap(disk_continuation.solutions[:1])
