from __future__ import annotations

import math

import numpy as np
import pytest

from glvortex import conformal, curves, frame_flow as ff, gl_solver as gs, mesh_fem as mf
from glvortex.errors import HolomorphyFailure, ModulusTooSmall, NoReturn

QUAD = conformal.taylor([0, 1, 0.2])


@pytest.fixture(scope="module")
def mobius_flow():
    f = conformal.rebase(conformal.identity(), 0.3 + 0.2j)
    frame = ff.frame_from_conformal(f)
    return f, frame, ff.integrate_flow(frame, n_s=32, n_theta=64)


def test_conformal_frame_is_orthonormal_and_scaled():
    f = conformal.rebase(QUAD, 0.2j)
    frame = ff.frame_from_conformal(f)
    x = f(0.6 * np.exp(1j * np.linspace(0, 2 * np.pi, 20)))
    assert frame.sample_orthonormality(x) < 1e-12
    vs, vt = frame.velocity(x)
    assert np.allclose(vs, np.exp(frame.phi(x)) * frame.v(x))
    assert np.allclose(vt, np.exp(frame.phi(x)) * frame.u(x))


@pytest.mark.parametrize("f", [conformal.identity(), conformal.mobius(0.5), QUAD], ids=["id", "mobius", "quad"])
def test_cartan_identity_and_winding(f):
    rep = ff.cartan_identity_check(ff.frame_from_conformal(f))
    assert rep["star_residual"] <= 1e-4
    assert abs(rep["winding_integral"] - 2 * math.pi) <= 1e-4
    assert abs(rep["omega_loop_integral"] + 2 * math.pi) <= 1e-4


def test_rk4_adaptive_matches_exponential():
    y = ff.rk4_adaptive(lambda t, y: 1j * y, np.array([1.0 + 0j, 2.0]), 0.0, 3.0, tol=1e-11)
    assert np.max(np.abs(y - np.array([1.0, 2.0]) * np.exp(3j))) < 1e-9
    back = ff.rk4_adaptive(lambda t, y: 1j * y, y, 3.0, 0.0, tol=1e-11)
    assert np.max(np.abs(back - np.array([1.0, 2.0]))) < 1e-9


def test_flow_of_mobius_frame_is_exponential_chart(mobius_flow):
    f, frame, flow = mobius_flow
    assert abs(flow.rho - 2 * math.pi) < 1e-6
    theta0 = np.angle(f.inverse(np.array([flow.anchor]))[0])
    chart = f(np.exp(flow.s[:, None] + 1j * (flow.theta[None, :] + theta0)))
    assert np.max(np.abs(chart - flow.psi)) < 1e-7
    assert flow.closure_error < 1e-4 and flow.commutator_error < 1e-4
    assert flow.core_reached is False


def test_round_trip_recovers_rebased_map(mobius_flow):
    f, _, flow = mobius_flow
    g, info = ff.reconstruct_map(flow)
    z = 0.8 * np.exp(1j * np.linspace(0, 2 * np.pi, 30))
    assert np.max(np.abs(g(z) - f(z))) < 1e-4
    assert info["cr_residual"] < 1e-3


def test_quadratic_round_trip_and_anchor_invariance():
    frame = ff.frame_from_conformal(QUAD)
    fits = []
    for anchor in (None, QUAD(np.exp(2.0j))):
        flow = ff.integrate_flow(frame, n_s=32, n_theta=64, anchor=anchor)
        g, _ = ff.reconstruct_map(flow)
        fits.append(g.coefficients)
    for c in fits:
        assert abs(c[1] - 1.0) < 1e-3 and abs(c[2] - 0.2) < 1e-3
    assert np.max(np.abs(fits[0][:4] - fits[1][:4])) < 1e-4


def test_flow_truncates_at_core_radius():
    flow = ff.integrate_flow(ff.frame_from_conformal(conformal.identity()), s_min=-5.0, n_s=16, n_theta=32)
    assert flow.core_reached
    assert abs(flow.s[0] - math.log(0.05)) < 1e-9
    with pytest.raises(ValueError):
        ff.integrate_flow(ff.frame_from_conformal(conformal.identity()), s_min=0.0)


def test_flow_json_round_trip(mobius_flow):
    flow = mobius_flow[2]
    back = ff.FlowResult.from_json(flow.to_json())
    assert np.allclose(back.psi, flow.psi) and back.rho == flow.rho and back.anchor == flow.anchor


def test_non_holomorphic_grid_rejected(mobius_flow):
    flow = mobius_flow[2]
    bad = ff.FlowResult(flow.psi + 0.05 * np.conj(flow.psi), flow.s, flow.theta, flow.rho, flow.anchor,
                        flow.closure_error, flow.commutator_error, flow.core_reached, flow.s_min_requested)
    with pytest.raises(HolomorphyFailure):
        ff.reconstruct_map(bad)


def test_spiralling_theta_flow_has_no_return():
    def velocity(x):
        return x, (1j + 0.05) * x

    circle = np.exp(2j * np.pi * np.arange(256) / 256)
    frame = ff.FrameField(lambda x: 1j * x / abs(x), lambda x: x / abs(x), lambda x: np.log(abs(x)),
                          0j, "synthetic", circle, velocity)
    with pytest.raises(NoReturn):
        ff.measure_period(frame, 1.0 + 0j)


def test_liouville_relation_on_boundary():
    frame = ff.frame_from_conformal(QUAD)
    assert ff.liouville_residual(frame, QUAD) < 1e-6


def test_gl_frame_flow_end_to_end(disk_continuation):
    sol = disk_continuation.solutions[-1]
    a = disk_continuation.reports[-1].clusters[0].center
    frame = ff.frame_from_gl(sol, a)
    x = 0.6 * np.exp(1j * np.linspace(0, 2 * np.pi, 16))
    assert frame.sample_orthonormality(x) < 1e-12
    assert np.max(np.abs(frame.u(x) - 1j * x / np.abs(x))) < 0.05
    flow = ff.integrate_flow(frame, n_s=32, n_theta=64)
    assert abs(flow.rho - 2 * math.pi) < 1e-2
    assert flow.closure_error < 1e-2 and flow.commutator_error < 1e-2
    g, info = ff.reconstruct_map(flow, cr_tol=1e-2)
    z = 0.8 * np.exp(1j * np.linspace(0, 2 * np.pi, 30))
    assert np.max(np.abs(g(z) - z)) < 2e-2


def test_gl_frame_rejects_wrong_vortex(disk_continuation):
    sol = disk_continuation.solutions[-1]
    with pytest.raises(ModulusTooSmall):
        ff.frame_from_gl(sol, 0.5)


def test_gl_frame_without_vortex():
    m = mf.mesh_curve(curves.circle(1.0), 0.05)
    sol = gs.minimize(m, curves.power_data(0, 0.0, 0.3, 2), 0.15)
    frame = ff.frame_from_gl(sol, None)
    x = 0.5 * np.exp(1j * np.linspace(0, 2 * np.pi, 16))
    assert frame.a is None
    assert np.all(np.isfinite(frame.phi(x)))
    assert abs(np.sum(m.lumped_mass * frame.phi(m.vertices))) < 1e-8
