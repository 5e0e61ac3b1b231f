"""Fourier-series solvers on the unit disk.

Boundary functions are stored by their Fourier coefficients ``c_n``,
``|n| <= N``, so that ``g(theta) = sum c_n e^{i n theta}``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate

from . import curves
from .errors import CompatibilityFailure, OutsideDisk, QuadratureFailure


@dataclass(frozen=True)
class FourierBoundary:
    coefficients: np.ndarray  # index k <-> mode n = k - N

    @property
    def N(self) -> int:
        return (len(self.coefficients) - 1) // 2

    @property
    def modes(self) -> np.ndarray:
        return np.arange(-self.N, self.N + 1)

    def mode(self, n: int) -> complex:
        return complex(self.coefficients[n + self.N]) if abs(n) <= self.N else 0j

    @classmethod
    def from_samples(cls, values, N: int | None = None) -> "FourierBoundary":
        """Coefficients from equispaced samples ``g(2 pi k / M)``."""
        g = np.asarray(values, dtype=complex)
        M = len(g)
        if N is None:
            N = (M - 1) // 2
        if 2 * N + 1 > M:
            raise ValueError("need at least 2N+1 samples")
        c = np.fft.fft(g) / M
        n = np.arange(-N, N + 1)
        return cls(c[n % M])

    @classmethod
    def from_function(cls, fn: Callable[[np.ndarray], np.ndarray], N: int = 128,
                      oversample: int = 4) -> "FourierBoundary":
        M = oversample * (2 * N + 1)
        theta = 2 * np.pi * np.arange(M) / M
        return cls.from_samples(fn(theta), N)

    def __call__(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        return np.exp(1j * theta[..., None] * self.modes) @ self.coefficients

    def derivative(self) -> "FourierBoundary":
        return FourierBoundary(1j * self.modes * self.coefficients)

    def parseval_energy(self) -> float:
        return float(np.sum(np.abs(self.coefficients) ** 2))

    def samples(self, M: int) -> np.ndarray:
        """Values on ``M`` equispaced angles via an inverse FFT."""
        buf = np.zeros(M, dtype=complex)
        buf[self.modes % M] += self.coefficients
        return np.fft.ifft(buf) * M

    def to_json(self) -> list:
        return [[int(n), float(c.real), float(c.imag)] for n, c in zip(self.modes, self.coefficients)]

    @classmethod
    def from_json(cls, rows) -> "FourierBoundary":
        N = max(abs(int(r[0])) for r in rows)
        c = np.zeros(2 * N + 1, dtype=complex)
        for n, re, im in rows:
            c[int(n) + N] += complex(re, im)
        return cls(c)


def poisson_extend(g: FourierBoundary) -> Callable[[np.ndarray], np.ndarray]:
    """Harmonic extension ``sum c_n r^|n| e^{i n theta}``."""
    modes = g.modes
    pos = modes >= 0
    neg = modes < 0
    cpos = g.coefficients[pos]  # n = 0..N
    cneg = g.coefficients[neg][::-1]  # n = -1..-N

    def v(z):
        z = np.asarray(z, dtype=complex)
        zbar = np.conj(z)
        out = np.polynomial.polynomial.polyval(z, cpos)
        out = out + zbar * np.polynomial.polynomial.polyval(zbar, cneg) if len(cneg) else out
        return out

    return v


@dataclass
class PotentialField:
    """``log_coefficient * ln|z - center| + smooth(z)``."""

    log_coefficient: float
    center: complex
    smooth: Callable[[np.ndarray], np.ndarray]
    smooth_gradient: Callable[[np.ndarray], np.ndarray] | None = None
    holomorphic: np.ndarray | None = None  # smooth = Re(sum holomorphic[k] z^k) when known

    def __call__(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=complex)
        return self.log_coefficient * np.log(np.abs(z - self.center)) + self.smooth(z)

    def gradient(self, z) -> np.ndarray:
        """Gradient as a complex number ``d/dx + i d/dy``."""
        z = np.asarray(z, dtype=complex)
        d = z - self.center
        return self.log_coefficient * d / np.abs(d) ** 2 + self.smooth_gradient(z)


def _check_disk(a: complex) -> complex:
    a = complex(a)
    if not abs(a) < 1.0:
        raise OutsideDisk(f"|a| = {abs(a):.6g} is not < 1")
    return a


def dirichlet_green_disk(a: complex) -> PotentialField:
    """``ln|z - a| - ln|1 - conj(a) z|``: Laplacian ``2 pi delta_a``, zero on the circle."""
    a = _check_disk(a)
    ab = np.conj(a)

    def smooth(z):
        return -np.log(np.abs(1.0 - ab * z))

    def smooth_gradient(z):
        # grad of Re(-log(1 - ab z)) is conj(ab / (1 - ab z))
        return np.conj(ab / (1.0 - ab * z))

    return PotentialField(1.0, a, smooth, smooth_gradient)


def neumann_green_disk(x: complex) -> Callable[[np.ndarray], np.ndarray]:
    """Neumann function ``G_x(y) = ln|y - x| + ln|1 - conj(x) y|``.

    Laplacian ``2 pi delta_x``; radial derivative identically 1 on the circle
    (the flux of the delta spread uniformly); zero mean on the circle.
    """
    x = _check_disk(x)
    xb = np.conj(x)

    def G(y):
        y = np.asarray(y, dtype=complex)
        return np.log(np.abs(y - x)) + np.log(np.abs(1.0 - xb * y))

    return G


def neumann_data(gf: FourierBoundary, M: int | None = None) -> np.ndarray:
    """Samples of ``q = <d_theta g, i g> = Im(conj(g) g_theta)`` on ``M`` angles."""
    if M is None:
        M = 4 * (2 * gf.N + 1)
    g = gf.samples(M)
    g_theta = gf.derivative().samples(M)
    return np.imag(np.conj(g) * g_theta)


def solve_phi_tilde(gf: FourierBoundary, degree_tol: float = 1e-4) -> PotentialField:
    """Solve ``Delta Phi = 2 pi deg delta_0`` with ``d_r Phi = q`` on the circle.

    The smooth part ``H`` has ``d_r H = q - deg`` mode by mode and zero mean on
    the circle.  Raises CompatibilityFailure when ``mean(q)`` differs from the
    winding number of the data.
    """
    M = 4 * (2 * gf.N + 1)
    q = neumann_data(gf, M)
    mean_q = float(q.mean())
    deg = curves.degree(gf.samples(max(M, 256)), max(M, 256))
    if abs(mean_q - deg) > degree_tol:
        raise CompatibilityFailure(f"mean of Neumann data {mean_q:.8f} != degree {deg}")
    qhat = np.fft.fft(q) / M
    N = gf.N
    n = np.arange(1, N + 1)
    # H = Re(sum_{n>=1} 2 h_n z^n) with h_n = qhat_n / n
    h = qhat[n] / n
    poly = np.concatenate([[0.0], 2.0 * h])
    dpoly = 2.0 * h * n  # derivative coefficients of sum 2 h_n z^n

    def smooth(z):
        return np.real(np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), poly))

    def smooth_gradient(z):
        return np.conj(np.polynomial.polynomial.polyval(np.asarray(z, dtype=complex), dpoly))

    return PotentialField(float(deg), 0.0j, smooth, smooth_gradient, holomorphic=poly)


def phi_tilde_conjugate(field: PotentialField, z) -> np.ndarray:
    """Harmonic conjugate of ``Phi~``: ``deg * arg z + Im(sum 2 h_n z^n)``.

    This is the phase obtained by integrating ``*dPhi~`` from the ray theta = 0.
    """
    z = np.asarray(z, dtype=complex)
    return field.log_coefficient * np.angle(z) + np.imag(
        np.polynomial.polynomial.polyval(z, field.holomorphic))


def poisson_kernel_integral(M: float, r: float, rtol: float = 1e-10) -> float:
    """``(1-r) int_{M(1-r)}^{2pi - M(1-r)} d theta / (1 + r^2 - 2 r cos theta)``."""
    delta = M * (1.0 - r)
    if not delta < np.pi:
        raise ValueError("need M (1 - r) < pi")

    def integrand(theta):
        # 1 + r^2 - 2 r cos(theta), written without cancellation near theta = 0
        return 1.0 / ((1.0 - r) ** 2 + 4.0 * r * math.sin(0.5 * theta) ** 2)

    # symmetric about pi; integrate on [delta, pi] with breakpoints resolving the peak
    width = 1.0 - r
    pts = [p for p in (delta + width * k for k in (1, 10, 100, 1000)) if p < np.pi]
    value, err = integrate.quad(integrand, delta, np.pi, points=pts or None,
                                epsabs=0.0, epsrel=rtol, limit=500)
    if err > 1e-8 * abs(value):
        raise QuadratureFailure(f"Poisson kernel quadrature error {err:.3g}")
    return 2.0 * width * value


def poisson_kernel_limit(M: float, r_list=(0.999, 0.9999)) -> dict:
    """Quadrature values and their Richardson extrapolation in ``1 - r``."""
    r_list = sorted(float(r) for r in r_list)
    if any(not 0.9 < r < 1.0 for r in r_list):
        raise ValueError("r values must lie in (0.9, 1)")
    values = [poisson_kernel_integral(M, r) for r in r_list]
    h = np.array([1.0 - r for r in r_list])
    if len(values) >= 2:
        # linear extrapolation in h through the last two points
        h1, h2 = h[-2], h[-1]
        v1, v2 = values[-2], values[-1]
        limit = v2 + (v2 - v1) * h2 / (h1 - h2)
    else:
        limit = values[-1]
    candidates = {"8*arctan(1/M)": 8 * math.atan(1 / M), "2*arctan(1/M)": 2 * math.atan(1 / M)}
    rel = {k: abs(limit - v) / abs(v) for k, v in candidates.items()}
    return {
        "M": M,
        "r": r_list,
        "values": values,
        "extrapolated_limit": limit,
        "candidates": candidates,
        "relative_mismatch": rel,
        "matches": min(rel, key=rel.get),
    }


def properness_profile(g: FourierBoundary, radii, n_theta: int = 2048) -> np.ndarray:
    """``min_theta |v(r e^{i theta})|`` for the harmonic extension ``v`` of ``g``."""
    v = poisson_extend(g)
    theta = 2 * np.pi * np.arange(n_theta) / n_theta
    out = []
    for r in radii:
        out.append(float(np.min(np.abs(v(r * np.exp(1j * theta))))))
    return np.array(out)
