"""Canonical harmonic maps with one degree-1 singularity and their renormalized energy.

Boundary data ``g`` is given as a function of the parameter ``t`` of the base
uniformization ``f0``: the boundary point with parameter ``t`` is
``f0(e^{2 pi i t})``.  For the catalog curves (circle, polynomial images of the
circle) this is the curve's own parametrization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import conformal, curves, disk_analysis
from .conformal import ConformalMap
from .errors import (BoundaryArgmax, NonClosedForm, NonconvergentLimit, OutsideDisk,
                     PhaseClosureFailure)


@dataclass
class CanonicalMapSpec:
    base: ConformalMap  # uniformization f0 of the domain
    data: curves.BoundaryData  # g as a function of the base parameter t
    a: complex
    f: ConformalMap  # f0 rebased so that f(0) = a, f'(0) > 0
    omega: complex  # preimage of a under f0
    phi_tilde: disk_analysis.PotentialField
    g_disk: disk_analysis.FourierBoundary  # g o f on the unit circle

    def boundary_on_disk(self, theta) -> np.ndarray:
        w = self.f.inner_point(np.exp(1j * np.asarray(theta, dtype=float)))
        return self.data(np.mod(np.angle(w) / (2 * np.pi), 1.0))


def canonical_spec(base: ConformalMap, data: curves.BoundaryData, a: complex | None = None,
                   omega: complex | None = None, n_modes: int = 128) -> CanonicalMapSpec:
    """Rebase ``base`` at the singularity and solve for ``Phi~`` on the disk."""
    if omega is None:
        if a is None:
            raise ValueError("give a or omega")
        omega = complex(base.inverse(np.array([complex(a)]))[0])
    omega = complex(omega)
    if not abs(omega) < 1:
        raise OutsideDisk("singularity is not inside the domain")
    f = conformal.rebase(base, omega)
    a = f.base_point

    def g_disk_fn(theta):
        w = f.inner_point(np.exp(1j * theta))
        return data(np.mod(np.angle(w) / (2 * np.pi), 1.0))

    gf = disk_analysis.FourierBoundary.from_function(g_disk_fn, N=n_modes)
    deg = curves.degree(gf.samples(1024), 1024)
    if deg != 1:
        raise PhaseClosureFailure(f"boundary data has degree {deg}, expected 1")
    phi = disk_analysis.solve_phi_tilde(gf)
    return CanonicalMapSpec(base, data, a, f, omega, phi, gf)


@dataclass
class CanonicalHarmonicMap:
    """``u = u~ o f^{-1}`` with ``u~ = exp(i (phase + c))`` anchored at theta = 0."""

    spec: CanonicalMapSpec
    anchor_shift: float
    boundary_error: float
    loop_degree: int

    def phase_disk(self, z) -> np.ndarray:
        return disk_analysis.phi_tilde_conjugate(self.spec.phi_tilde, z) + self.anchor_shift

    def on_disk(self, z) -> np.ndarray:
        return np.exp(1j * self.phase_disk(z))

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=complex)
        return self.on_disk(self.spec.f.inverse(x))

    def phi_on_domain(self, x) -> np.ndarray:
        """``Phi = Phi~ o f^{-1}``; ``*omega = dPhi`` for ``omega = <du, -iu>``."""
        z = self.spec.f.inverse(np.asarray(x, dtype=complex))
        return self.spec.phi_tilde(z)

    def holomorphic_derivative(self, z) -> np.ndarray:
        """``F'`` for ``F = deg log z + sum 2 h_n z^n``; ``|grad u~|^2 = |F'|^2``."""
        z = np.asarray(z, dtype=complex)
        poly = self.spec.phi_tilde.holomorphic
        dpoly = poly[1:] * np.arange(1, len(poly))
        return self.spec.phi_tilde.log_coefficient / z + np.polynomial.polynomial.polyval(z, dpoly)


def canonical_harmonic_map(spec: CanonicalMapSpec, n_check: int = 1024) -> CanonicalHarmonicMap:
    theta = 2 * np.pi * np.arange(n_check) / n_check
    g = spec.boundary_on_disk(theta)
    z = np.exp(1j * theta)
    base_phase = disk_analysis.phi_tilde_conjugate(spec.phi_tilde, z)
    shift = float(np.angle(g[0] * np.exp(-1j * base_phase[0])))
    u = np.exp(1j * (base_phase + shift))
    err = float(np.sqrt(np.mean(np.abs(u - g) ** 2)))
    # winding of the reconstructed phase around the singularity
    loop = np.exp(1j * disk_analysis.phi_tilde_conjugate(spec.phi_tilde, 0.5 * z))
    total = float(np.sum(np.angle(np.roll(loop, -1) / loop)))
    k = round(total / (2 * np.pi))
    if abs(total - 2 * np.pi * k) > 1e-6:
        raise PhaseClosureFailure(f"phase loop {total:.9f} is not a multiple of 2 pi")
    return CanonicalHarmonicMap(spec, shift, err, int(k))


# ---------------------------------------------------------------------------
# renormalized energy


def _excision_radius(f: ConformalMap, a: complex, delta: float, theta: np.ndarray) -> np.ndarray:
    """``r(theta)`` with ``|f(r e^{i theta}) - a| = delta`` (Newton from the linearization)."""
    e = np.exp(1j * theta)
    r = np.full(theta.shape, delta / abs(f.derivative_at_0))
    for _ in range(50):
        w = f(r * e) - a
        dist = np.abs(w)
        dr = np.real(np.conj(w) / dist * f.d1(r * e) * e)
        step = (dist - delta) / dr
        r = r - step
        if np.max(np.abs(step)) < 1e-15:
            break
    if np.any(~np.isfinite(r)) or np.any(r <= 0) or np.any(r >= 1):
        raise NonconvergentLimit("excision radius not found")
    return r


def truncated_dirichlet(chm: CanonicalHarmonicMap, delta: float, n_theta: int = 512,
                        n_s: int = 48) -> float:
    """``int |grad u|^2`` over ``{x in Omega : |x - a| > delta}``, computed on the disk."""
    spec = chm.spec
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    r_d = _excision_radius(spec.f, spec.a, delta, theta)
    x, w = np.polynomial.legendre.leggauss(n_s)
    s0 = np.log(r_d)[:, None]
    s = 0.5 * s0 * (1 - x[None, :])  # from ln r_d to 0
    z = np.exp(s) * np.exp(1j * theta)[:, None]
    integrand = np.abs(z * chm.holomorphic_derivative(z)) ** 2
    radial = np.sum(integrand * w[None, :], axis=1) * (-0.5 * s0[:, 0])
    return float(np.sum(radial) * 2 * np.pi / n_theta)


@dataclass
class DirectEnergy:
    value: float
    deltas: list
    truncated: list  # per-delta value minus 2 pi ln(1/delta)


def renormalized_energy_direct(spec: CanonicalMapSpec, delta_list=(0.08, 0.04, 0.02, 0.01),
                               spread_tol: float = 1e-2) -> DirectEnergy:
    """Finite part of the Dirichlet energy, extrapolated to ``delta -> 0``.

    The last three values are fitted by ``c0 + c1 delta + c2 delta^2`` (the
    remainder is quadratic for smooth ``mu``); with two deltas the fit is linear.
    """
    deltas = [float(d) for d in delta_list]
    if any(d2 >= d1 for d1, d2 in zip(deltas, deltas[1:])):
        raise ValueError("delta_list must be decreasing")
    if len(deltas) < 2 or deltas[-1] < 1e-3:
        raise ValueError("need >= 2 deltas, all >= 1e-3")
    chm = canonical_harmonic_map(spec)
    vals = [truncated_dirichlet(chm, d) - 2 * math.pi * math.log(1 / d) for d in deltas]
    if abs(vals[-1] - vals[-2]) > spread_tol:
        raise NonconvergentLimit(f"per-delta values {vals[-2]:.6f}, {vals[-1]:.6f} not stable")
    order = 2 if len(deltas) >= 3 else 1
    coeffs = np.polyfit(deltas[-order - 1:], vals[-order - 1:], order)
    return DirectEnergy(float(coeffs[-1]), deltas, vals)


def renormalized_energy_formula(f: ConformalMap, n_quad=(128, 256)) -> float:
    """``wp_energy(f) + 2 pi ln|f'(0)|`` for ``f`` rebased at the singularity."""
    return conformal.wp_energy(f, n_quad) + 2 * math.pi * math.log(abs(f.derivative_at_0))


def renormalized_energy_at(base: ConformalMap, omega, w0_value: float | None = None) -> np.ndarray:
    """``W(base(omega)) = W0 - 2 pi ln(|base'(omega)| (1 - |omega|^2))`` (vectorized)."""
    omega = np.asarray(omega, dtype=complex)
    if w0_value is None:
        w0_value = conformal.w0(base)
    return w0_value - 2 * np.pi * np.log(np.abs(base.d1(omega)) * (1 - np.abs(omega) ** 2))


# ---------------------------------------------------------------------------
# optimal vortex


@dataclass
class VortexOptimum:
    omega: complex
    a: complex
    value: float


def vortex_objective(base: ConformalMap, omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=complex)
    return np.abs(base.d1(omega)) * (1 - np.abs(omega) ** 2)


def optimal_vortex(base: ConformalMap, n_grid: int = 101, r_max: float = 0.99) -> VortexOptimum:
    """Maximize ``|f0'(omega)| (1 - |omega|^2)``: polar grid search, then Nelder-Mead."""
    r = np.linspace(0.0, r_max, n_grid)
    th = 2 * np.pi * np.arange(n_grid) / n_grid
    grid = (r[:, None] * np.exp(1j * th)[None, :]).ravel()
    vals = vortex_objective(base, grid)
    best = vals.max()
    # deterministic tie-break: lexicographically smallest omega among near-maxima
    ties = grid[vals >= best * (1 - 1e-12)]
    start = sorted(ties, key=lambda z: (round(z.real, 12), round(z.imag, 12)))[0]

    def neg(p):
        z = complex(p[0], p[1])
        if abs(z) >= 1:
            return 0.0
        return -float(vortex_objective(base, np.array([z]))[0])

    res = optimize.minimize(neg, [start.real, start.imag], method="Nelder-Mead",
                            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 4000})
    omega = complex(res.x[0], res.x[1])
    if abs(omega) > 0.999:
        raise BoundaryArgmax(f"argmax at |omega| = {abs(omega):.6f}")
    return VortexOptimum(omega, complex(base(np.array([omega]))[0]), -float(res.fun))


# ---------------------------------------------------------------------------
# Green mass


def green_mass_consistency(base: ConformalMap, a: complex, mesh) -> dict:
    from .mesh_fem import green_dirichlet_fem

    omega = complex(base.inverse(np.array([complex(a)]))[0])
    f = conformal.rebase(base, omega)
    spectral = -math.log(abs(f.derivative_at_0))
    fem = green_dirichlet_fem(mesh, a).mass
    return {"spectral": spectral, "fem": fem, "diff": abs(spectral - fem)}


# ---------------------------------------------------------------------------
# mu decomposition


@dataclass
class MuDecomposition:
    mu: np.ndarray  # values on the sample points (zero mean)
    points: np.ndarray  # sample points (disk coordinates for the spectral route)
    closedness_residual: float
    harmonicity_residual: float
    extras: dict = field(default_factory=dict)


def mu_decomposition_spectral(u_disk, n_r: int = 64, n_theta: int = 256, r_range=(0.2, 0.95),
                              closed_tol: float = 1e-4) -> MuDecomposition:
    """``mu~`` with ``d mu~ = *omega~ - d ln r`` for ``omega~ = <d u~, -i u~>`` on the disk.

    ``u_disk`` evaluates the S^1-valued map pulled back to the disk (singularity
    at 0).  The angular derivative is spectral, the radial one a 4th-order
    difference; the form is integrated along circles, then along a ray.
    """
    r = np.linspace(*r_range, n_r)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    e = np.exp(1j * th)[None, :]
    z = r[:, None] * e
    u = u_disk(z)
    hr = 1e-4 * r[:, None]
    stencil = [u_disk((r[:, None] + k * hr) * e) for k in (-2, -1, 1, 2)]
    u_r = (stencil[0] - 8 * stencil[1] + 8 * stencil[2] - stencil[3]) / (12 * hr)
    k = np.fft.fftfreq(n_theta, 1.0 / n_theta)
    # differentiate the lifted phase rather than u itself: smooth and periodic up to 2 pi deg
    phase = np.unwrap(np.angle(u), axis=1)
    deg = np.round((phase[:, -1] - phase[:, 0] + np.angle(u[:, 0] / u[:, -1])) / (2 * np.pi))
    periodic = phase - deg[:, None] * th[None, :]
    phase_theta = np.real(np.fft.ifft(1j * k * np.fft.fft(periodic, axis=1), axis=1)) + deg[:, None]
    omega_r = -np.imag(np.conj(u) * u_r)
    omega_t = -phase_theta
    dmu_r = -omega_t / r[:, None] - 1.0 / r[:, None]
    dmu_t = r[:, None] * omega_r
    loops = np.abs(np.mean(dmu_t, axis=1)) * 2 * np.pi
    if loops.max() > closed_tol:
        raise NonClosedForm(f"loop integral {loops.max():.3g} exceeds {closed_tol}")
    ft = np.fft.fft(dmu_t, axis=1)
    with np.errstate(divide="ignore", invalid="ignore"):
        anti = np.where(k != 0, ft / (1j * k), 0.0)
    osc = np.real(np.fft.ifft(anti, axis=1))
    mean_r = np.mean(dmu_r, axis=1)
    from scipy.integrate import cumulative_trapezoid

    mean_part = cumulative_trapezoid(mean_r, r, initial=0.0)
    mu = osc + mean_part[:, None]
    mu -= mu.mean()
    # closedness: the radial derivative of the reconstruction vs the form
    mu_r = np.gradient(mu, r, axis=0, edge_order=2)
    closed = float(np.max(np.abs(mu_r - dmu_r)[2:-2]) / max(1.0, np.max(np.abs(dmu_r))))
    lap = (np.gradient(r[:, None] * mu_r, r, axis=0, edge_order=2) / r[:, None]
           + np.real(np.fft.ifft(-(k ** 2) * np.fft.fft(mu, axis=1), axis=1)) / r[:, None] ** 2)
    harm = float(np.max(np.abs(lap[3:-3])))
    return MuDecomposition(mu, z, closed, harm, {"loop_integral": float(loops.max()),
                                                 "mu_r": dmu_r, "mu_theta": dmu_t, "r": r})


def mu_dirichlet_energy(dec: MuDecomposition) -> float:
    """``int |grad mu~|^2`` over the sampled annulus (trapezoid in r, mean in theta)."""
    r = dec.extras["r"]
    dens = dec.extras["mu_r"] ** 2 + (dec.extras["mu_theta"] / r[:, None]) ** 2
    from scipy.integrate import trapezoid

    return float(trapezoid(np.mean(dens, axis=1) * 2 * np.pi * r, r))


def mu_decomposition_mesh(mesh, values, a: complex, core_radius: float,
                          green=None) -> MuDecomposition:
    """Least-squares P1 ``mu`` with ``grad mu ~ *omega - dG`` outside the core.

    Inside ``|x - a| < core_radius`` only ``int |grad mu|^2`` is penalized, so ``mu``
    is extended harmonically across the vortex core.
    """
    from .mesh_fem import green_dirichlet_fem, triangle_gradients
    import scipy.sparse.linalg as spla

    u = np.asarray(values, dtype=complex)
    mod = np.abs(u)
    uh = np.where(mod > 0, u / np.where(mod > 0, mod, 1), 0)
    ux, uy = triangle_gradients(mesh, uh)
    uc = uh[mesh.triangles].mean(axis=1)
    uc2 = np.maximum(np.abs(uc) ** 2, 1e-300)
    wx = -np.imag(np.conj(uc) * ux) / uc2
    wy = -np.imag(np.conj(uc) * uy) / uc2
    if green is None:
        green = green_dirichlet_fem(mesh, a)
    cent = mesh.vertices[mesh.triangles].mean(axis=1)
    hx, hy = triangle_gradients(mesh, green.regular.values.real)
    d = cent - a
    gx = np.real(d) / np.abs(d) ** 2 + hx.real
    gy = np.imag(d) / np.abs(d) ** 2 + hy.real
    bx = -wy - gx
    by = wx - gy
    outside = np.abs(d) > core_radius
    bx = np.where(outside, bx, 0.0)
    by = np.where(outside, by, 0.0)
    area = mesh.signed_areas
    grads = mesh.basis_gradients
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, mesh.triangles.ravel(),
              (area[:, None] * (grads.real * bx[:, None] + grads.imag * by[:, None])).ravel())
    K = mesh.stiffness.tocsr()
    w = mesh.lumped_mass
    # pin the additive constant at vertex 0; the mean is removed afterwards
    A = K.tolil()
    A[0, 0] = A[0, 0] + 1.0
    mu = spla.spsolve(A.tocsc(), rhs)
    mu = mu - np.sum(w * mu) / np.sum(w)
    mx, my = triangle_gradients(mesh, mu)
    res = np.sqrt(np.sum(area * outside * ((mx.real - bx) ** 2 + (my.real - by) ** 2)))
    norm = np.sqrt(np.sum(area * outside * (bx ** 2 + by ** 2)))
    scale = np.sqrt(np.sum(area * outside * (gx ** 2 + gy ** 2)))
    closed = float(res / max(scale, 1e-300))
    lap = (K @ mu) / w
    far = (np.abs(mesh.vertices - a) > 2 * core_radius) & ~mesh.boundary_mask
    harm = float(np.sqrt(np.mean(lap[far] ** 2))) if np.any(far) else 0.0
    far_vals = mu[far] if np.any(far) else mu
    return MuDecomposition(mu, mesh.vertices, closed, harm,
                           {"oscillation": float(far_vals.max() - far_vals.min()),
                            "target_norm": float(norm), "green_mass": green.mass})


def mu_decomposition(u, a=0j, mesh=None, **kwargs) -> MuDecomposition:
    """Dispatch: mesh values with ``mesh`` given, else a disk evaluator (spectral route)."""
    if mesh is not None:
        return mu_decomposition_mesh(mesh, u, a, **kwargs)
    return mu_decomposition_spectral(u, **kwargs)


# ---------------------------------------------------------------------------
# report


@dataclass
class RenormReport:
    W_direct: float
    direct_table: list
    W_formula: float
    W0: float
    green_mass: float
    vortex_argmax: complex
    omega_argmax: complex
    objective_value: float

    @property
    def route_discrepancy(self) -> float:
        return abs(self.W_direct - self.W_formula)

    def to_json(self) -> dict:
        return {
            "W_direct": self.W_direct,
            "direct_table": [{"delta": d, "value": v} for d, v in self.direct_table],
            "W_formula": self.W_formula,
            "W0": self.W0,
            "green_mass": self.green_mass,
            "vortex_argmax": [self.vortex_argmax.real, self.vortex_argmax.imag],
            "omega_argmax": [self.omega_argmax.real, self.omega_argmax.imag],
            "objective_value": self.objective_value,
            "route_discrepancy": self.route_discrepancy,
        }


def renorm_report(base: ConformalMap, data: curves.BoundaryData, a: complex | None = None,
                  delta_list=(0.08, 0.04, 0.02, 0.01), green_mass_fem: float | None = None) -> RenormReport:
    """Both energy routes at ``a`` (default: the optimal vortex)."""
    opt = optimal_vortex(base)
    omega = opt.omega if a is None else None
    spec = canonical_spec(base, data, a=a, omega=omega)
    direct = renormalized_energy_direct(spec, delta_list)
    formula = renormalized_energy_formula(spec.f)
    W0 = conformal.w0(spec.f)
    mass = -math.log(abs(spec.f.derivative_at_0)) if green_mass_fem is None else green_mass_fem
    return RenormReport(direct.value, list(zip(direct.deltas, direct.truncated)), formula, W0, mass,
                        opt.a, opt.omega, opt.value)
