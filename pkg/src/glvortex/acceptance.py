"""Acceptance checks with measured value, expected value and tolerance.

Shared by ``glvortex verify`` and the test suite.  Every check returns a
``CheckResult``; sub-measurements go into ``details``.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import conformal, curves, disk_analysis, frame_flow, gl_solver, mesh_fem, renorm


@dataclass
class CheckResult:
    id: int
    name: str
    measured: float
    expected: float
    tol: float
    passed: bool
    runtime: float = 0.0
    details: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"[{status}] criterion {self.id:2d} {self.name}: measured={self.measured:.6g} "
                f"expected={self.expected:.6g} tol={self.tol:.1e} ({self.runtime:.1f}s)")


def _result(cid, name, worst, tol, passed, t0, expected=0.0, **details) -> CheckResult:
    return CheckResult(cid, name, float(worst), float(expected), float(tol), bool(passed),
                       time.perf_counter() - t0, details)


def _series_wp_taylor_quadratic(c: float, n_terms: int = 400) -> float:
    """``pi sum |a_n|^2/(n+1)`` for ``f''/f' = 2c/(1+2cz) = sum a_n z^n``."""
    n = np.arange(n_terms)
    a = 2 * c * (-2 * c) ** n
    return float(np.pi * np.sum(np.abs(a) ** 2 / (n + 1)))


def _series_wp_mobius(omega: complex, n_terms: int = 2000) -> float:
    """Same series for ``psi''/psi' = 2 conj(omega) / (1 - conj(omega) z)``."""
    n = np.arange(n_terms)
    a = 2 * np.conj(omega) ** (n + 1)
    return float(np.pi * np.sum(np.abs(a) ** 2 / (n + 1)))


def _quadratic_root(c: float) -> float:
    roots = np.roots([3 * c, 1.0, -c])
    return float(roots[(roots.real > 0) & (roots.real < 1)].real[0])


# ---------------------------------------------------------------------------


def check_01_disk_renormalized_energy() -> CheckResult:
    t0 = time.perf_counter()
    tang = curves.tangent_data(curves.circle(1.0))
    rows, worst_f, worst_d = [], 0.0, 0.0
    for a in (0.0, 0.3, 0.5):
        spec = renorm.canonical_spec(conformal.identity(), tang, a=a)
        wf = renorm.renormalized_energy_formula(spec.f)
        wd = renorm.renormalized_energy_direct(spec).value
        exact = -2 * math.pi * math.log(1 - a * a)
        worst_f = max(worst_f, abs(wf - exact))
        worst_d = max(worst_d, abs(wd - wf))
        rows.append({"a": a, "formula": wf, "direct": wd, "closed_form": exact})
    ok = worst_f <= 1e-3 and worst_d <= 1e-2 and time.perf_counter() - t0 < 30
    return _result(1, "disk W(a) = -2pi ln(1-|a|^2)", worst_f, 1e-3, ok, t0,
                   route_discrepancy=worst_d, route_tol=1e-2, rows=rows)


def check_02_w0_invariance(seed: int = 1) -> CheckResult:
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    omegas = [0.7 * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform()) for _ in range(10)]
    spreads = {}
    for name, f0 in (("identity", conformal.identity()), ("z+0.2z^2", conformal.taylor([0, 1, 0.2]))):
        vals = [conformal.w0(f0)] + [conformal.w0(conformal.rebase(f0, w)) for w in omegas]
        spreads[name] = max(vals) - min(vals)
    mob = max(abs(conformal.w0(conformal.mobius(w))) for w in omegas)
    worst = max(max(spreads.values()), mob)
    ok = worst <= 1e-3 and time.perf_counter() - t0 < 60
    return _result(2, "W0 invariance under Mobius rebasing", worst, 1e-3, ok, t0,
                   spreads=spreads, mobius_w0=mob)


def check_03_wp_closed_forms() -> CheckResult:
    t0 = time.perf_counter()
    quad = conformal.wp_energy(conformal.taylor([0, 1, 0.2]))
    mob = conformal.wp_energy(conformal.mobius(0.5))
    oq, om = _series_wp_taylor_quadratic(0.2), _series_wp_mobius(0.5)
    worst = max(abs(quad - oq), abs(mob - om))
    return _result(3, "WP energy closed forms", worst, 1e-3, worst <= 1e-3, t0,
                   quadratic=quad, quadratic_oracle=oq, mobius=mob, mobius_oracle=om)


def check_04_optimal_vortex(seed: int = 2) -> CheckResult:
    t0 = time.perf_counter()
    f0 = conformal.taylor([0, 1, 0.2])
    opt = renorm.optimal_vortex(f0)
    w_star = _quadratic_root(0.2)
    a_star = w_star + 0.2 * w_star ** 2
    err_w = abs(opt.omega - w_star)
    err_a = abs(opt.a - a_star)
    rng = np.random.default_rng(seed)
    inv = 0.0
    for _ in range(5):
        psi_inv = 0.6 * math.sqrt(rng.uniform()) * np.exp(2j * np.pi * rng.uniform())
        g = conformal.rebase(f0, psi_inv, gauge=False).rotated(2 * np.pi * rng.uniform())
        inv = max(inv, abs(renorm.optimal_vortex(g).a - opt.a))
    ok = err_w <= 1e-4 and err_a <= 1e-4 and inv <= 1e-5
    return _result(4, "optimal vortex for z+0.2z^2", max(err_w, err_a), 1e-4, ok, t0, expected=0.0,
                   omega=opt.omega, omega_oracle=w_star, a=opt.a, a_oracle=a_star,
                   invariance=inv, invariance_tol=1e-5, value=opt.value)


def check_05_gl_disk(h: float = 0.02) -> CheckResult:
    t0 = time.perf_counter()
    mesh = mesh_fem.mesh_curve(curves.circle(1.0), h)
    data = curves.tangent_data(curves.circle(1.0))
    res = gl_solver.continuation(mesh, data, gl_solver.GLConfig(eps_schedule=(0.2, 0.1, 0.05)))
    final = res.reports[-1]
    center_err = abs(final.clusters[0].center) if final.count else math.inf
    max_mod = max(gl_solver.max_modulus_check(s) for s in res.solutions)
    gap = gl_solver.log_energy_gap(res.solutions)
    checks = {
        "one_cluster": final.count == 1,
        "center_within_2h": center_err <= 2 * h,
        "max_modulus": max_mod <= 1 + 1e-6,
        "gap_spread": gap.spread <= 1.0,
        "potential_ratio": gap.potential_ratio <= 5.0,
        "clearance": final.boundary_clearance >= 5.0,
        "converged": all(s.converged for s in res.solutions),
    }
    runtime = time.perf_counter() - t0
    ok = all(checks.values()) and runtime < 300
    return _result(5, "GL continuation on the disk", center_err, 2 * h, ok, t0,
                   checks=checks, clusters=final.count, max_modulus=max_mod, gaps=gap.gaps,
                   gap_spread=gap.spread, potential_ratio=gap.potential_ratio,
                   clearance=final.boundary_clearance, path=res.vortex_path)


def check_06_gl_quadratic(h: float = 0.02) -> CheckResult:
    t0 = time.perf_counter()
    curve = curves.analytic_curve([0, 1, 0.2])
    f0 = conformal.taylor([0, 1, 0.2])
    mesh = mesh_fem.mesh_curve(curve, h)
    data = curves.tangent_data(curve)
    opt = renorm.optimal_vortex(f0)
    spec = renorm.canonical_spec(f0, data, omega=opt.omega)
    seed = (renorm.canonical_harmonic_map(spec), opt.a)
    res = gl_solver.continuation(mesh, data, gl_solver.GLConfig(init="canonical"), seed)
    final = res.reports[-1]
    tol = max(2 * h, 5e-2)
    err = min((abs(c.center - opt.a) for c in final.clusters), default=math.inf)
    ok = final.count == 1 and err <= tol and time.perf_counter() - t0 < 600
    return _result(6, "GL vortex on z+0.2z^2 near a*", err, tol, ok, t0,
                   a_star=opt.a, clusters=[c.center for c in final.clusters], path=res.vortex_path)


def check_07_green_mass(h: float = 0.02) -> CheckResult:
    t0 = time.perf_counter()
    mesh = mesh_fem.mesh_curve(curves.circle(1.0), h)
    mass = mesh_fem.green_dirichlet_fem(mesh, 0.3).mass
    exact = -math.log(0.91)
    err = abs(mass - exact)
    return _result(7, "FEM Green mass at a=0.3", err, 5e-3, err <= 5e-3, t0, mass=mass, exact=exact)


def check_08_flow_round_trip() -> CheckResult:
    t0 = time.perf_counter()
    ident = frame_flow.frame_from_conformal(conformal.identity())
    fl_i = frame_flow.integrate_flow(ident)
    g_i, _ = frame_flow.reconstruct_map(fl_i)
    z = (np.linspace(0, 0.9, 10)[:, None] * np.exp(2j * np.pi * np.arange(64) / 64)[None, :]).ravel()
    id_err = float(np.max(np.abs(g_i(z) - z)))
    rho_err = abs(fl_i.rho - 2 * math.pi)
    quad = frame_flow.frame_from_conformal(conformal.taylor([0, 1, 0.2]))
    fl_q = frame_flow.integrate_flow(quad)
    g_q, _ = frame_flow.reconstruct_map(fl_q)
    c = g_q.coefficients
    coef_err = max(abs(c[1] - 1.0), abs(c[2] - 0.2))
    flow_err = max(fl_i.closure_error, fl_i.commutator_error, fl_q.closure_error, fl_q.commutator_error)
    ok = id_err <= 1e-3 and rho_err <= 1e-4 and coef_err <= 1e-2 and flow_err <= 1e-4
    return _result(8, "frame flow round trip", id_err, 1e-3, ok, t0, rho_error=rho_err,
                   coefficient_error=coef_err, coefficients=c[:4], flow_errors=flow_err)


def check_09_cartan_identity() -> CheckResult:
    t0 = time.perf_counter()
    worst_star, worst_loop, rows = 0.0, 0.0, {}
    for name, f in (("identity", conformal.identity()), ("mobius(0.5)", conformal.mobius(0.5)),
                    ("z+0.2z^2", conformal.taylor([0, 1, 0.2]))):
        rep = frame_flow.cartan_identity_check(frame_flow.frame_from_conformal(f), 128, 256)
        worst_star = max(worst_star, rep["star_residual"])
        worst_loop = max(worst_loop, abs(rep["winding_integral"] - 2 * math.pi))
        rows[name] = rep
    ok = worst_star <= 1e-4 and worst_loop <= 1e-4
    return _result(9, "Cartan identity *omega = dPhi", worst_star, 1e-4, ok, t0,
                   winding_error=worst_loop, rows=rows)


def check_10_degree_and_h_half() -> CheckResult:
    t0 = time.perf_counter()
    wrong = [d for d in range(-2, 4) if curves.degree(curves.power_data(d)) != d]
    hs = curves.h_half_seminorm(curves.power_data(1), curves.circle(1.0))
    err = abs(hs - 4 * math.pi ** 2)
    ok = not wrong and err <= 1e-3
    return _result(10, "degree quadrature and H^1/2 seminorm", err, 1e-3, ok, t0,
                   expected=0.0, wrong_degrees=wrong, h_half=hs)


def check_11_poisson_limit(M_values=(0.5, 1.0, 2.0)) -> CheckResult:
    t0 = time.perf_counter()
    worst, rows = 0.0, []
    for M in M_values:
        rep = disk_analysis.poisson_kernel_limit(M, (0.999, 0.9999))
        rel = abs(rep["values"][-1] - rep["extrapolated_limit"]) / abs(rep["extrapolated_limit"])
        worst = max(worst, rel)
        rows.append({"M": M, "limit": rep["extrapolated_limit"], "matches": rep["matches"],
                     "relative_mismatch": rep["relative_mismatch"]})
    return _result(11, "Poisson-kernel limit extrapolation", worst, 1e-2, worst <= 1e-2, t0,
                   rows=rows, matches=sorted({r["matches"] for r in rows}))


def check_12_gradient_consistency(seed: int = 3, h: float = 0.08) -> CheckResult:
    t0 = time.perf_counter()
    mesh = mesh_fem.mesh_curve(curves.circle(1.0), h)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(5):
        u = rng.normal(size=mesh.n_vertices) + 1j * rng.normal(size=mesh.n_vertices)
        d = rng.normal(size=mesh.n_vertices) + 1j * rng.normal(size=mesh.n_vertices)
        eps, t = 0.3, 1e-6
        fd = (mesh_fem.gl_energy(mesh, u + t * d, eps).total - mesh_fem.gl_energy(mesh, u - t * d, eps).total) / (2 * t)
        an = float(np.real(np.vdot(mesh_fem.gl_gradient_values(mesh, u, eps), d)))
        worst = max(worst, abs(fd - an) / abs(an))
    return _result(12, "GL gradient vs finite differences", worst, 1e-5, worst <= 1e-5, t0)


CHECKS = {
    1: check_01_disk_renormalized_energy,
    2: check_02_w0_invariance,
    3: check_03_wp_closed_forms,
    4: check_04_optimal_vortex,
    5: check_05_gl_disk,
    6: check_06_gl_quadratic,
    7: check_07_green_mass,
    8: check_08_flow_round_trip,
    9: check_09_cartan_identity,
    10: check_10_degree_and_h_half,
    11: check_11_poisson_limit,
    12: check_12_gradient_consistency,
}

SUITES = {
    "fast": (1, 2, 3, 4, 7, 9, 10, 11, 12),
    "full": tuple(CHECKS),
}


def run_suite(name: str, echo=None) -> list[CheckResult]:
    if name not in SUITES:
        raise KeyError(name)
    out = []
    for cid in SUITES[name]:
        res = CHECKS[cid]()
        out.append(res)
        if echo is not None:
            echo(res.line())
    return out
