"""Singular orthonormal frames ``(v, u)`` and the commuting flows of ``e^Phi v`` and ``e^Phi u``.

Conventions: ``v = -i u``; the connection form is ``omega = <du, v>`` and the
potential satisfies ``*omega = dPhi`` with ``*dx = dy``, ``*dy = -dx``.  The
winding integral ``oint <du, i u>`` equals ``2 pi deg``.  The flow map
``psi(s, theta)`` solves ``d_s psi = e^Phi v``, ``d_theta psi = e^Phi u``; for a
frame built from a uniformization ``f`` it is ``psi(s, theta) = f(e^{s + i theta})``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.interpolate import CubicSpline

from . import conformal
from .conformal import ConformalMap
from .errors import HolomorphyFailure, ModulusTooSmall, NoReturn

Evaluator = Callable[[np.ndarray], np.ndarray]


@dataclass
class FrameField:
    u: Evaluator
    v: Evaluator
    phi: Evaluator
    a: complex | None
    source: str  # from-conformal | from-GL
    boundary: np.ndarray  # dense polyline of the domain boundary, counterclockwise
    velocity_fn: Callable | None = None  # optional joint evaluator of (e^Phi v, e^Phi u)
    map: ConformalMap | None = None
    ode_tol: float = 1e-8

    def velocity(self, x) -> tuple[np.ndarray, np.ndarray]:
        """``(e^Phi v, e^Phi u)`` at ``x``."""
        x = np.asarray(x, dtype=complex)
        if self.velocity_fn is not None:
            return self.velocity_fn(x)
        scale = np.exp(self.phi(x))
        return scale * self.v(x), scale * self.u(x)

    def sample_orthonormality(self, x) -> float:
        """Max deviation from ``|u| = |v| = 1``, ``<u, v> = 0``, ``det[v u] = 1``."""
        u, v = self.u(x), self.v(x)
        return float(max(np.max(np.abs(np.abs(u) - 1)), np.max(np.abs(np.abs(v) - 1)),
                         np.max(np.abs(np.real(np.conj(u) * v))),
                         np.max(np.abs(np.imag(np.conj(v) * u) - 1))))


def frame_from_conformal(f: ConformalMap, n_boundary: int = 4096) -> FrameField:
    """Pushforward of the polar frame: ``u = f_theta/|f_theta|``, ``v = f_r/|f_r|``."""

    def parts(x):
        z = f.inverse(np.asarray(x, dtype=complex))
        return z, z * f.d1(z)

    def v(x):
        _, w = parts(x)
        return w / np.abs(w)

    def u(x):
        return 1j * v(x)

    def phi(x):
        z, w = parts(x)
        return np.log(np.abs(w))  # ln|f'| + ln|z|

    def velocity(x):
        _, w = parts(x)
        return w, 1j * w

    th = 2 * np.pi * np.arange(n_boundary) / n_boundary
    return FrameField(u, v, phi, f.base_point, "from-conformal", f(np.exp(1j * th)), velocity, f)


def _jacobi_smooth(mesh, values: np.ndarray) -> np.ndarray:
    """One Jacobi sweep for the discrete Laplacian; boundary values kept."""
    K = mesh.stiffness
    diag = K.diagonal()
    out = values - (K @ values) / diag
    out[mesh.boundary_loop] = values[mesh.boundary_loop]
    return out


def frame_from_gl(solution, a: complex | None, core_factor: float = 3.0, ode_tol: float = 1e-6) -> FrameField:
    """Frame from a GL minimizer: ``u = u_eps/|u_eps|`` (after one Jacobi pass), ``v = -i u``.

    ``Phi = mu + G`` with ``G`` the FEM Dirichlet Green function at ``a``; for
    ``a=None`` (degree 0) ``Phi = mu`` has no logarithmic part.
    """
    from .mesh_fem import green_dirichlet_fem
    from .renorm import mu_decomposition_mesh

    mesh, eps = solution.mesh, solution.eps
    raw = solution.values
    core = core_factor * eps
    outside = np.ones(mesh.n_vertices, dtype=bool) if a is None else np.abs(mesh.vertices - a) > core
    if np.any(np.abs(raw[outside]) < 0.5):
        raise ModulusTooSmall(f"|u| = {np.min(np.abs(raw[outside])):.3f} < 0.5 outside the core")
    sm = _jacobi_smooth(mesh, raw)
    unit = sm / np.maximum(np.abs(sm), 1e-300)
    if a is None:
        green_vals = np.zeros(mesh.n_vertices)
        mu = _mu_without_singularity(mesh, unit)
        phi_vals = mu
        log_coef = 0.0
        a_pt = 0j
    else:
        green = green_dirichlet_fem(mesh, a)
        dec = mu_decomposition_mesh(mesh, unit, a, core, green)
        green_vals = green.regular.values.real
        phi_vals = dec.mu + green_vals
        log_coef = 1.0
        a_pt = complex(a)

    def u(x):
        w = mesh.interpolate(unit, x)
        return w / np.abs(w)

    def v(x):
        return -1j * u(x)

    def phi(x):
        x = np.asarray(x, dtype=complex)
        return mesh.interpolate(phi_vals, x) + log_coef * np.log(np.abs(x - a_pt))

    return FrameField(u, v, phi, None if a is None else complex(a), "from-GL", mesh.boundary_polyline,
                      ode_tol=ode_tol)


def _mu_without_singularity(mesh, unit: np.ndarray) -> np.ndarray:
    """Least-squares P1 potential of ``*omega`` for a frame without singularity."""
    import scipy.sparse.linalg as spla
    from .mesh_fem import triangle_gradients

    ux, uy = triangle_gradients(mesh, unit)
    uc = unit[mesh.triangles].mean(axis=1)
    uc2 = np.abs(uc) ** 2
    wx = -np.imag(np.conj(uc) * ux) / uc2
    wy = -np.imag(np.conj(uc) * uy) / uc2
    bx, by = -wy, wx
    g = mesh.basis_gradients
    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, mesh.triangles.ravel(),
              (mesh.signed_areas[:, None] * (g.real * bx[:, None] + g.imag * by[:, None])).ravel())
    A = mesh.stiffness.tolil()
    A[0, 0] += 1.0
    mu = spla.spsolve(A.tocsc(), rhs)
    return mu - np.sum(mesh.lumped_mass * mu) / np.sum(mesh.lumped_mass)


# ---------------------------------------------------------------------------
# Cartan identity


def _polar_samples(frame: FrameField, n_r: int, n_theta: int, r_range=(0.2, 0.9)) -> np.ndarray:
    r = np.linspace(*r_range, n_r)
    e = np.exp(2j * np.pi * np.arange(n_theta) / n_theta)
    if frame.map is not None:
        return frame.map(r[:, None] * e[None, :])
    from .conformal import _distance_to_polyline

    rad = float(_distance_to_polyline(np.array([frame.a]), frame.boundary)[0])
    return frame.a + rad * r[:, None] * e[None, :]


def _winding_loop(frame: FrameField, radius: float = 0.5) -> Callable[[np.ndarray], np.ndarray]:
    """Closed loop ``t in [0, 1) -> x`` around the singularity."""
    if frame.map is not None:
        return lambda t: frame.map(radius * np.exp(2j * np.pi * t))
    from .conformal import _distance_to_polyline

    rad = float(_distance_to_polyline(np.array([frame.a]), frame.boundary)[0])
    return lambda t: frame.a + radius * rad * np.exp(2j * np.pi * t)


def cartan_identity_check(frame: FrameField, n_r: int = 128, n_theta: int = 256,
                          fd_step: float = 1e-5) -> dict:
    """Max ``|*omega - dPhi|`` on a polar grid and the winding integral around ``a``."""
    x = _polar_samples(frame, n_r, n_theta)
    h = fd_step
    u_x = (frame.u(x + h) - frame.u(x - h)) / (2 * h)
    u_y = (frame.u(x + 1j * h) - frame.u(x - 1j * h)) / (2 * h)
    p_x = (frame.phi(x + h) - frame.phi(x - h)) / (2 * h)
    p_y = (frame.phi(x + 1j * h) - frame.phi(x - 1j * h)) / (2 * h)
    v = frame.v(x)
    om_x = np.real(np.conj(v) * u_x)
    om_y = np.real(np.conj(v) * u_y)
    # *omega = -om_y dx + om_x dy
    resid = np.maximum(np.abs(-om_y - p_x), np.abs(om_x - p_y))
    gamma = _winding_loop(frame)
    n = 512
    t = np.arange(n) / n
    dt = 1e-6
    ul = frame.u(gamma(t))
    du = (frame.u(gamma(t + dt)) - frame.u(gamma(t - dt))) / (2 * dt)
    # trapezoid rule on the periodic loop
    winding = float(np.mean(np.imag(np.conj(ul) * du)))
    omega_loop = float(np.mean(np.real(np.conj(frame.v(gamma(t))) * du)))
    return {
        "star_residual": float(np.max(resid)),
        "winding_integral": winding,
        "omega_loop_integral": omega_loop,
        "winding_error": abs(winding - 2 * np.pi * round(winding / (2 * np.pi))),
        "grid": [n_r, n_theta],
    }


# ---------------------------------------------------------------------------
# ODE integration


def rk4_adaptive(fun, y0: np.ndarray, t0: float, t1: float, tol: float = 1e-8,
                 h0: float | None = None, max_steps: int = 200000) -> np.ndarray:
    """Classical RK4 with step doubling; all components share the step.

    The local error estimate is ``max|y_half - y_full| / 15``.  Returns ``y(t1)``.
    """
    y = np.asarray(y0, dtype=complex).copy()
    span = t1 - t0
    if span == 0:
        return y
    direction = math.copysign(1.0, span)
    h = abs(h0) if h0 else abs(span) / 16
    t = t0

    def step(t, y, h):
        k1 = fun(t, y)
        k2 = fun(t + h / 2, y + h / 2 * k1)
        k3 = fun(t + h / 2, y + h / 2 * k2)
        k4 = fun(t + h, y + h * k3)
        return y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)

    for _ in range(max_steps):
        remaining = t1 - t
        if remaining * direction <= 1e-15 * max(1.0, abs(t1)):
            return y
        hh = direction * min(h, abs(remaining))
        full = step(t, y, hh)
        half = step(t + hh / 2, step(t, y, hh / 2), hh / 2)
        err = float(np.max(np.abs(half - full))) / 15.0
        if err <= tol or abs(hh) < 1e-12:
            t += hh
            y = half + (half - full) / 15.0
            h = abs(hh) * min(4.0, 0.9 * (tol / max(err, 1e-300)) ** 0.2)
        else:
            h = abs(hh) * max(0.1, 0.9 * (tol / err) ** 0.2)
    raise RuntimeError("rk4_adaptive: too many steps")


def _theta_flow(frame: FrameField, x0: np.ndarray, spans) -> np.ndarray:
    """Flow each ``x0[k]`` along ``e^Phi u`` for time ``spans[k]`` (rescaled to unit time)."""
    spans = np.broadcast_to(np.asarray(spans, dtype=float), np.shape(x0))

    def fun(_, y):
        return spans * frame.velocity(y)[1]

    return rk4_adaptive(fun, x0, 0.0, 1.0, frame.ode_tol)


def _s_flow(frame: FrameField, x0: np.ndarray, s_values) -> np.ndarray:
    """Positions at every ``s`` in the decreasing list ``s_values`` (starting at s = 0)."""
    out = np.empty((len(s_values),) + np.shape(x0), dtype=complex)
    y = np.asarray(x0, dtype=complex)
    s_prev = 0.0

    def fun(_, y):
        return frame.velocity(y)[0]

    for j, s in enumerate(s_values):
        y = rk4_adaptive(fun, y, s_prev, s, frame.ode_tol)
        out[j] = y
        s_prev = s
    return out


def _anchor(frame: FrameField) -> complex:
    """Boundary sample nearest to angle 0 as seen from the singularity."""
    b = frame.boundary
    center = frame.a if frame.a is not None else complex(np.mean(b))
    return complex(b[np.argmin(np.abs(np.angle(b - center)))])


def measure_period(frame: FrameField, anchor: complex, return_tol: float = 1e-6) -> float:
    """First return time of the theta-flow to ``anchor``."""
    b = frame.boundary
    seg = np.abs(np.diff(np.concatenate([b, b[:1]])))
    speed = np.abs(frame.velocity(b)[1])
    guess = float(np.sum(seg / speed))
    _, xt = frame.velocity(np.array([anchor]))
    tangent = xt[0] / abs(xt[0])

    def fun(_, y):
        return frame.velocity(y)[1]

    n_chunks = 64
    dt = guess / n_chunks
    y = np.array([anchor])
    t = 0.0
    prev_d = None
    while t < 2 * guess:
        y_next = rk4_adaptive(fun, y, t, t + dt, frame.ode_tol)
        d = float(np.real(np.conj(tangent) * (y_next[0] - anchor)))
        if t > 0.5 * guess and prev_d is not None and prev_d < 0 <= d:
            # Newton on the tangential displacement
            tt, yy = t + dt, y_next
            for _ in range(20):
                disp = float(np.real(np.conj(tangent) * (yy[0] - anchor)))
                vel = float(np.real(np.conj(tangent) * fun(tt, yy)[0]))
                corr = -disp / vel
                yy = rk4_adaptive(fun, yy, tt, tt + corr, frame.ode_tol)
                tt += corr
                if abs(corr) < 1e-14 * guess:
                    break
            if abs(yy[0] - anchor) > return_tol * max(1.0, abs(anchor)):
                raise NoReturn(f"theta-orbit misses the anchor by {abs(yy[0] - anchor):.3g}")
            return tt
        prev_d = d
        y = y_next
        t += dt
    raise NoReturn("theta-orbit did not return within twice the period guess")


@dataclass
class FlowResult:
    psi: np.ndarray  # shape (n_s, n_theta); psi[j, k] = psi(s[j], theta[k])
    s: np.ndarray  # increasing, s[-1] = 0
    theta: np.ndarray  # k rho / n_theta
    rho: float
    anchor: complex
    closure_error: float
    commutator_error: float
    core_reached: bool
    s_min_requested: float

    def to_json(self) -> dict:
        return {
            "rho": self.rho,
            "anchor": [self.anchor.real, self.anchor.imag],
            "closure_error": self.closure_error,
            "commutator_error": self.commutator_error,
            "core_reached": self.core_reached,
            "s_min_requested": self.s_min_requested,
            "s": self.s.tolist(),
            "theta": self.theta.tolist(),
            "psi": [[[p.real, p.imag] for p in row] for row in self.psi],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FlowResult":
        psi = np.array([[complex(a, b) for a, b in row] for row in obj["psi"]])
        return cls(psi, np.asarray(obj["s"]), np.asarray(obj["theta"]), obj["rho"], complex(*obj["anchor"]),
                   obj["closure_error"], obj["commutator_error"], obj["core_reached"], obj["s_min_requested"])


def integrate_flow(frame: FrameField, s_min: float = -1.5, n_s: int = 64, n_theta: int = 128,
                   n_closure: int = 5, n_commutator: int = 50, seed: int = 0,
                   anchor: complex | None = None, core_radius: float = 0.05) -> FlowResult:
    """Flow grid ``psi(s, theta)`` on ``[s_min, 0] x [0, rho)`` from a boundary anchor.

    The s-range is truncated where the disk radius ``e^{2 pi s / rho}`` would drop
    below ``core_radius`` (the flow slows to a halt at the singularity).
    """
    if s_min >= 0:
        raise ValueError("s_min must be negative")
    anchor = _anchor(frame) if anchor is None else complex(anchor)
    rho = measure_period(frame, anchor)
    s_floor = rho / (2 * np.pi) * math.log(core_radius)
    core_reached = s_min < s_floor
    s_lo = max(s_min, s_floor)
    theta = rho * np.arange(n_theta) / n_theta
    # boundary row: theta-flow from the anchor, interval by interval
    row = np.empty(n_theta, dtype=complex)
    row[0] = anchor
    y = np.array([anchor])

    def fun_t(_, y):
        return frame.velocity(y)[1]

    for k in range(1, n_theta):
        y = rk4_adaptive(fun_t, y, theta[k - 1], theta[k], frame.ode_tol)
        row[k] = y[0]
    s = np.linspace(s_lo, 0.0, n_s)
    cols = _s_flow(frame, row, s[::-1][1:])  # decreasing s below 0
    psi = np.empty((n_s, n_theta), dtype=complex)
    psi[-1] = row
    psi[:-1] = cols[::-1]
    # closure: one full theta-period at interior s-levels
    levels = np.unique(np.linspace(0, n_s - 1, n_closure).round().astype(int))
    start = psi[levels, 0]
    end = _theta_flow(frame, start, rho)
    closure = float(np.max(np.abs(end - start)))
    # commutator: s first (column theta=0), then theta, vs the grid (theta first, then s)
    rng = np.random.default_rng(seed)
    jj = rng.integers(0, n_s, n_commutator)
    kk = rng.integers(0, n_theta, n_commutator)
    other = _theta_flow(frame, psi[jj, 0], theta[kk])
    commutator = float(np.max(np.abs(other - psi[jj, kk])))
    return FlowResult(psi, s, theta, rho, anchor, closure, commutator, core_reached, s_min)


def reconstruct_map(flow: FlowResult, radii=(0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9), n_coeffs: int = 24,
                    cr_tol: float = 1e-3) -> tuple[ConformalMap, dict]:
    """Taylor fit of ``f(r e^{i t}) = psi((rho/2pi) ln r, (rho/2pi) t)``, gauge-fixed ``f'(0) > 0``."""
    n_theta = flow.psi.shape[1]
    scale = flow.rho / (2 * np.pi)
    radii = np.asarray(radii, dtype=float)
    s_need = scale * np.log(radii)
    if s_need.min() < flow.s[0] - 1e-12:
        raise ValueError("flow grid does not reach the smallest radius")
    spline = CubicSpline(flow.s, flow.psi, axis=0)
    circles = spline(s_need)  # (n_r, n_theta) at angles 2 pi k / n_theta
    F = np.fft.fft(circles, axis=1) / n_theta
    n = np.arange(n_coeffs)
    rn = radii[:, None] ** n[None, :]
    coeffs = np.sum(rn * F[:, :n_coeffs], axis=0) / np.sum(rn ** 2, axis=0)
    neg = F[:, n_theta // 2 + 1:]
    negative_modes = float(np.max(np.abs(neg)))
    beta = -np.angle(coeffs[1])
    coeffs = coeffs * np.exp(1j * beta * n)
    # Cauchy-Riemann residual: d_theta psi = i d_s psi
    k = np.fft.fftfreq(n_theta, 1.0 / n_theta) / scale
    psi_t = np.fft.ifft(1j * k * np.fft.fft(flow.psi, axis=1), axis=1)
    psi_s = spline(flow.s, 1)
    inner = slice(2, -2)
    cr = float(np.max(np.abs(psi_t[inner] - 1j * psi_s[inner]) / np.abs(psi_t[inner])))
    if cr > cr_tol:
        raise HolomorphyFailure(f"Cauchy-Riemann residual {cr:.3g} > {cr_tol}")
    trimmed = coeffs.copy()
    trimmed[np.abs(trimmed) < 1e-14] = 0
    return conformal.taylor(trimmed), {"cr_residual": cr, "negative_modes": negative_modes,
                                       "rotation": float(beta)}


def liouville_residual(frame: FrameField, f: ConformalMap, r: float = 0.99, n: int = 512,
                       fd_step: float = 1e-5) -> float:
    """Max of ``|r d_r mu~ - (<d_theta u~, i u~> - 1)|`` on the circle of radius ``r``.

    ``u~ = u o f`` and ``mu~ = Phi o f - ln r`` are the pullbacks to the disk.
    """
    th = 2 * np.pi * np.arange(n) / n
    e = np.exp(1j * th)

    def mu_t(rr):
        return frame.phi(f(rr * e)) - np.log(rr)

    h = fd_step
    dmu = (mu_t(r + h) - mu_t(r - h)) / (2 * h)
    ut = frame.u(f(r * e))
    ang = np.exp(1j * h)
    du = (frame.u(f(r * e * ang)) - frame.u(f(r * e / ang))) / (2 * h)
    lhs = r * dmu
    rhs = np.real(np.conj(1j * ut) * du) - 1.0
    return float(np.max(np.abs(lhs - rhs)))
