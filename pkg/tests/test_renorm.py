from __future__ import annotations

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from glvortex import conformal, curves, renorm
from glvortex.errors import NonClosedForm, NonconvergentLimit, PhaseClosureFailure

QUAD = conformal.taylor([0, 1, 0.2])
DISK_DATA = curves.tangent_data(curves.circle(1.0))
QUAD_DATA = curves.tangent_data(curves.analytic_curve([0, 1, 0.2]))


def _stationary_root(c: float) -> float:
    roots = np.roots([3 * c, 1.0, -c])
    return float(roots[(roots.real > 0) & (roots.real < 1)].real[0])


@pytest.mark.parametrize("a", [0.0, 0.3, 0.5, 0.4j])
def test_disk_renormalized_energy(a):
    spec = renorm.canonical_spec(conformal.identity(), DISK_DATA, a=a)
    exact = -2 * math.pi * math.log(1 - abs(a) ** 2)
    assert abs(renorm.renormalized_energy_formula(spec.f) - exact) < 1e-9
    assert abs(renorm.renormalized_energy_direct(spec).value - exact) < 1e-5


def test_canonical_map_on_centered_disk_is_tangent_field():
    chm = renorm.canonical_harmonic_map(renorm.canonical_spec(conformal.identity(), DISK_DATA, a=0.0))
    x = np.array([0.3, 0.5j, -0.2 - 0.6j])
    assert np.allclose(chm(x), 1j * x / np.abs(x), atol=1e-10)
    assert chm.loop_degree == 1 and chm.boundary_error < 1e-10


def test_canonical_map_on_quadratic_domain():
    spec = renorm.canonical_spec(QUAD, QUAD_DATA, a=0.1 + 0.05j)
    chm = renorm.canonical_harmonic_map(spec)
    assert chm.boundary_error < 1e-8
    assert abs(spec.f.base_point - (0.1 + 0.05j)) < 1e-12
    z = 0.5 * np.exp(1j * np.linspace(0, 2 * np.pi, 16, endpoint=False))
    u = chm.on_disk

    def dphase(w, step):
        return np.angle(u(w + step) / u(w))

    h = 1e-4
    lap = (dphase(z, h) + dphase(z, -h) + dphase(z, 1j * h) + dphase(z, -1j * h)) / h ** 2
    assert np.max(np.abs(lap)) < 1e-4
    grad = (dphase(z, 1e-6) - dphase(z, -1e-6)) / 2e-6 + 1j * (dphase(z, 1e-6j) - dphase(z, -1e-6j)) / 2e-6
    assert np.max(np.abs(np.abs(grad) - np.abs(chm.holomorphic_derivative(z)))) < 1e-6
    # Phi~ on the disk is ln|f'| + ln r, so mu~ = ln|f'| up to a constant
    zz = 0.7 * z
    phi = spec.phi_tilde(zz) - np.log(np.abs(zz))
    ref = np.log(np.abs(spec.f.d1(zz)))
    assert np.ptp(phi - ref) < 1e-10


def test_degree_two_data_rejected():
    with pytest.raises(PhaseClosureFailure):
        renorm.canonical_spec(conformal.identity(), curves.power_data(2), a=0.1)


def test_direct_route_matches_formula_on_quadratic_domain():
    opt = renorm.optimal_vortex(QUAD)
    spec = renorm.canonical_spec(QUAD, QUAD_DATA, omega=opt.omega)
    direct = renorm.renormalized_energy_direct(spec)
    formula = renorm.renormalized_energy_formula(spec.f)
    assert abs(direct.value - formula) < 1e-5
    assert len(direct.truncated) == 4


def test_direct_route_input_checks():
    spec = renorm.canonical_spec(conformal.identity(), DISK_DATA, a=0.3)
    with pytest.raises(ValueError):
        renorm.renormalized_energy_direct(spec, (0.01, 0.02))
    with pytest.raises(ValueError):
        renorm.renormalized_energy_direct(spec, (0.01,))
    with pytest.raises(NonconvergentLimit):
        renorm.renormalized_energy_direct(spec, (0.4, 0.2), spread_tol=1e-12)


@settings(max_examples=20, deadline=None)
@given(r=st.floats(0.0, 0.8), t=st.floats(0.0, 2 * math.pi))
def test_energy_map_agrees_with_rebased_formula(r, t):
    omega = r * np.exp(1j * t)
    w0 = conformal.w0(QUAD)
    grid_value = float(renorm.renormalized_energy_at(QUAD, np.array([omega]), w0)[0])
    direct = renorm.renormalized_energy_formula(conformal.rebase(QUAD, omega))
    assert abs(grid_value - direct) < 1e-6


def test_optimal_vortex_quadratic_oracle():
    opt = renorm.optimal_vortex(QUAD)
    w = _stationary_root(0.2)
    assert abs(opt.omega - w) < 1e-6
    assert abs(opt.a - (w + 0.2 * w * w)) < 1e-6


def test_optimal_vortex_of_disk_is_center_and_invariant():
    assert abs(renorm.optimal_vortex(conformal.identity()).a) < 1e-6
    g = conformal.rebase(conformal.identity(), 0.5 - 0.2j, gauge=False)
    assert abs(renorm.optimal_vortex(g).a) < 1e-6


def test_optimal_vortex_maximizes_energy_map():
    opt = renorm.optimal_vortex(QUAD)
    rng = np.random.default_rng(4)
    om = 0.9 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
    assert np.all(renorm.vortex_objective(QUAD, om) <= opt.value + 1e-12)


def test_green_mass_consistency(disk_mesh):
    rep = renorm.green_mass_consistency(conformal.identity(), 0.3, disk_mesh)
    assert abs(rep["spectral"] + math.log(0.91)) < 1e-12
    assert rep["diff"] < 5e-3


def test_spectral_mu_recovers_log_derivative():
    spec = renorm.canonical_spec(QUAD, QUAD_DATA, a=0.0)
    chm = renorm.canonical_harmonic_map(spec)
    dec = renorm.mu_decomposition(chm.on_disk)
    ref = np.log(np.abs(spec.f.d1(dec.points)))
    ref -= ref.mean()
    assert np.max(np.abs(dec.mu - ref)) < 1e-8
    assert dec.closedness_residual < 1e-4
    assert dec.extras["loop_integral"] < 1e-8
    assert renorm.mu_dirichlet_energy(dec) > 0


def test_spectral_mu_rejects_non_closed_form():
    with pytest.raises(NonClosedForm):
        renorm.mu_decomposition_spectral(lambda z: z / np.abs(z) * np.exp(1j * np.abs(z) ** 2))


def test_mesh_mu_of_gl_solution_is_nearly_constant(disk_continuation):
    sol = disk_continuation.solutions[-1]
    a = disk_continuation.reports[-1].clusters[0].center
    dec = renorm.mu_decomposition(sol.values, a, mesh=sol.mesh, core_radius=3 * sol.eps)
    far = np.abs(sol.mesh.vertices - a) > 6 * sol.eps
    assert np.std(dec.mu[far]) < 1e-2
    assert dec.closedness_residual < 5e-2
    assert abs(dec.extras["green_mass"]) < 1e-3


def test_mesh_mu_of_exact_canonical_map(disk_mesh):
    x = disk_mesh.vertices
    with np.errstate(invalid="ignore", divide="ignore"):
        u = np.where(np.abs(x) > 0, 1j * x / np.abs(x), 0)
    dec = renorm.mu_decomposition_mesh(disk_mesh, u, 0.0, 0.1)
    assert dec.extras["oscillation"] < 1e-2


def test_renorm_report_disk():
    rep = renorm.renorm_report(conformal.identity(), DISK_DATA, a=0.3)
    assert rep.route_discrepancy < 1e-2
    assert abs(rep.W_formula + 2 * math.pi * math.log(0.91)) < 1e-9
    assert abs(rep.W0) < 1e-9
    obj = rep.to_json()
    assert obj["route_discrepancy"] == rep.route_discrepancy
    assert len(obj["direct_table"]) == 4
