"""Holomorphic maps of the unit disk: Moebius rebasing, Weil-Petersson energy, W0.

A :class:`ConformalMap` is ``f = P o A`` where ``P`` is a polynomial (Taylor
coefficients about 0) and ``A`` is a disk automorphism stored as a 2x2 complex
matrix acting by ``z -> (p z + q) / (r z + s)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from . import curves
from .errors import InverseFailure, NonconvergentTail, OutsideDisk, SelfIntersection

_IDENTITY = np.eye(2, dtype=complex)


def _check_disk(omega: complex) -> complex:
    omega = complex(omega)
    if not abs(omega) < 1.0:
        raise OutsideDisk(f"|omega| = {abs(omega):.6g} is not < 1")
    return omega


def mobius_matrix(omega: complex, theta: float = 0.0) -> np.ndarray:
    """Matrix of ``psi(z) = e^{i theta} (z - omega) / (conj(omega) z - 1)``."""
    omega = _check_disk(omega)
    rot = np.exp(1j * theta)
    return np.array([[rot, -rot * omega], [np.conj(omega), -1.0]], dtype=complex)


def _apply(m: np.ndarray, z):
    return (m[0, 0] * z + m[0, 1]) / (m[1, 0] * z + m[1, 1])


@dataclass(frozen=True)
class ConformalMap:
    coefficients: np.ndarray = field(default_factory=lambda: np.array([0.0, 1.0], dtype=complex))
    inner: np.ndarray = field(default_factory=lambda: _IDENTITY.copy())

    def __post_init__(self):
        object.__setattr__(self, "coefficients", np.asarray(self.coefficients, dtype=complex))
        object.__setattr__(self, "inner", np.asarray(self.inner, dtype=complex))

    # -- representation -----------------------------------------------------
    @property
    def outer_is_identity(self) -> bool:
        c = self.coefficients
        return len(c) >= 2 and c[1] == 1 and not np.any(c[0]) and not np.any(c[2:])

    @property
    def inner_is_identity(self) -> bool:
        m = self.inner / self.inner[1, 1]
        return bool(np.allclose(m, _IDENTITY, atol=0.0, rtol=0.0))

    @property
    def representation(self) -> str:
        if self.inner_is_identity:
            return "taylor"
        if self.outer_is_identity:
            return "mobius"
        return "composite"

    # -- evaluation ---------------------------------------------------------
    def _inner_derivs(self, z):
        m = self.inner
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        den = m[1, 0] * z + m[1, 1]
        return (m[0, 0] * z + m[0, 1]) / den, det / den**2, -2.0 * m[1, 0] * det / den**3

    def _poly(self, w, order: int):
        c = self.coefficients
        for _ in range(order):
            c = c[1:] * np.arange(1, len(c)) if len(c) > 1 else np.zeros(1, dtype=complex)
        return np.polynomial.polynomial.polyval(w, c)

    def __call__(self, z):
        w, _, _ = self._inner_derivs(np.asarray(z, dtype=complex))
        return self._poly(w, 0)

    def d1(self, z):
        w, a1, _ = self._inner_derivs(np.asarray(z, dtype=complex))
        return self._poly(w, 1) * a1

    def d2(self, z):
        w, a1, a2 = self._inner_derivs(np.asarray(z, dtype=complex))
        return self._poly(w, 2) * a1**2 + self._poly(w, 1) * a2

    def log_derivative_prime(self, z):
        """``f''/f'``, evaluated without forming the possibly tiny ``f'``."""
        w, a1, a2 = self._inner_derivs(np.asarray(z, dtype=complex))
        return self._poly(w, 2) / self._poly(w, 1) * a1 + a2 / a1

    @property
    def base_point(self) -> complex:
        return complex(self(np.array(0.0 + 0j)))

    @property
    def derivative_at_0(self) -> complex:
        return complex(self.d1(np.array(0.0 + 0j)))

    def inner_point(self, z):
        """Image of ``z`` under the inner automorphism (the base-map coordinate)."""
        return _apply(self.inner, np.asarray(z, dtype=complex))

    # -- composition ---------------------------------------------------------
    def precompose(self, m: np.ndarray) -> "ConformalMap":
        """``f o M`` for a disk automorphism matrix ``M``."""
        return ConformalMap(self.coefficients, self.inner @ m)

    def rotated(self, beta: float) -> "ConformalMap":
        """``z -> f(e^{i beta} z)``."""
        rot = np.array([[np.exp(1j * beta), 0.0], [0.0, 1.0]], dtype=complex)
        return self.precompose(rot)

    def gauge_fixed(self) -> "ConformalMap":
        """Rotate the disk so that ``f'(0)`` is real positive."""
        return self.rotated(-np.angle(self.derivative_at_0))

    # -- inverse -------------------------------------------------------------
    def inverse(self, w, tol: float = 1e-13, max_iter: int = 60, r_max: float = 1.05,
                allowed_failure: float = 1e-3) -> np.ndarray:
        """Preimage of ``w`` by Newton iteration seeded from a polar grid."""
        w = np.asarray(w, dtype=complex)
        flat = w.ravel()
        tree, seeds = self._seed_tree(r_max)
        _, idx = tree.query(np.column_stack([flat.real, flat.imag]))
        z = seeds[idx].copy()
        active = np.ones(flat.shape, dtype=bool)
        for _ in range(max_iter):
            if not np.any(active):
                break
            za = z[active]
            res = self(za) - flat[active]
            step = res / self.d1(za)
            # damp steps that would leave the region where the map is defined
            big = np.abs(step) > 0.25
            step[big] *= 0.25 / np.abs(step[big])
            z[active] = za - step
            done = np.abs(step) <= tol * np.maximum(1.0, np.abs(za))
            sub = np.flatnonzero(active)
            active[sub[done]] = False
        fail = np.abs(self(z) - flat) > 1e-9 * np.maximum(1.0, np.abs(flat))
        if fail.mean() > allowed_failure:
            raise InverseFailure(f"Newton inverse failed on {fail.mean():.2%} of points")
        return z.reshape(w.shape)

    def _seed_tree(self, r_max: float):
        cache = self.__dict__.get("_seed_cache")
        if cache is not None and cache[0] == r_max:
            return cache[1], cache[2]
        r = np.linspace(0.0, r_max, 80)[1:]
        th = np.linspace(0.0, 2 * np.pi, 192, endpoint=False)
        seeds = np.concatenate([[0.0 + 0j], (r[:, None] * np.exp(1j * th[None, :])).ravel()])
        img = self(seeds)
        tree = cKDTree(np.column_stack([img.real, img.imag]))
        object.__setattr__(self, "_seed_cache", (r_max, tree, seeds))
        return tree, seeds

    # -- serialization ----------------------------------------------------------
    def to_json(self) -> dict:
        obj = {
            "representation": self.representation,
            "coefficients": [[float(c.real), float(c.imag)] for c in self.coefficients],
            "inner": [[[float(v.real), float(v.imag)] for v in row] for row in self.inner],
        }
        omega, theta = self.inner_mobius_params()
        obj["omega"] = [omega.real, omega.imag]
        obj["theta"] = theta
        return obj

    def inner_mobius_params(self) -> tuple[complex, float]:
        """(omega, theta) such that the inner automorphism is ``mobius(omega, theta)``."""
        m = self.inner
        omega = complex(-m[0, 1] / m[0, 0])
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        dpsi = det / (m[1, 0] * omega + m[1, 1]) ** 2
        theta = float(np.angle(dpsi * (abs(omega) ** 2 - 1.0)))
        return omega, theta

    @classmethod
    def from_json(cls, obj: dict) -> "ConformalMap":
        coeffs = np.array([complex(a, b) for a, b in obj["coefficients"]])
        if "inner" in obj:
            inner = np.array([[complex(a, b) for a, b in row] for row in obj["inner"]])
        else:
            omega = complex(*obj.get("omega", [0.0, 0.0]))
            inner = mobius_matrix(omega, obj.get("theta", 0.0))
        return cls(coeffs, inner)


# ---------------------------------------------------------------------------
# constructors


def identity() -> ConformalMap:
    return ConformalMap()


def taylor(coefficients) -> ConformalMap:
    return ConformalMap(np.asarray(coefficients, dtype=complex))


def mobius(omega: complex, theta: float = 0.0) -> ConformalMap:
    """The disk automorphism ``e^{i theta} (z - omega)/(conj(omega) z - 1)``."""
    return ConformalMap(inner=mobius_matrix(omega, theta))


def rebase(f0: ConformalMap, omega: complex, gauge: bool = True) -> ConformalMap:
    """``f0 o psi^{-1}`` with ``psi(omega) = 0``, so ``f(0) = f0(omega)``.

    With ``gauge=True`` the rotation is chosen so that ``f'(0) > 0``.
    """
    m = mobius_matrix(omega, 0.0)
    f = f0.precompose(np.linalg.inv(m))
    return f.gauge_fixed() if gauge else f


# ---------------------------------------------------------------------------
# checks


def check_injective(f: ConformalMap, n: int = 1024, r: float = 0.999) -> None:
    """Raise SelfIntersection unless ``f`` is injective at sample resolution.

    Uses the boundary criterion: the image of the circle of radius ``r`` is a
    simple curve and ``f'`` has no zero inside it (winding number of ``f'``).
    """
    th = 2 * np.pi * np.arange(n) / n
    z = r * np.exp(1j * th)
    curves.check_simple(f(z))
    if curves.degree(f.d1(z), n) != 0:
        raise SelfIntersection("f' vanishes inside the disk")


def _radial_nodes(n_segments: int, gauss: int = 8, ratio: float = 0.9):
    breaks = np.concatenate([[0.0], 1.0 - ratio ** np.arange(1, n_segments + 1), [1.0]])
    x, w = np.polynomial.legendre.leggauss(gauss)
    a, b = breaks[:-1, None], breaks[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def _wp_level(f: ConformalMap, n_segments: int, n_theta: int) -> float:
    r, wr = _radial_nodes(n_segments)
    th = 2 * np.pi * np.arange(n_theta) / n_theta
    total = 0.0
    for ri, wi in zip(np.array_split(r, 8), np.array_split(wr, 8)):
        z = ri[:, None] * np.exp(1j * th[None, :])
        q = np.abs(f.log_derivative_prime(z)) ** 2
        total += float(np.sum(q.mean(axis=1) * 2 * np.pi * ri * wi))
    return total


def wp_energy(f: ConformalMap, n_quad: tuple[int, int] = (128, 256), return_error: bool = False):
    """``int_D |f''/f'|^2 dA`` on a geometrically graded radial grid.

    ``n_quad = (radial, angular)`` fixes the coarse level; the fine level
    doubles both.  The error estimate is the difference of the two levels.
    """
    n_r, n_t = n_quad
    coarse = _wp_level(f, max(n_r // 8, 8) * 2, n_t)
    fine = _wp_level(f, max(n_r // 8, 8) * 4, 2 * n_t)
    err = abs(fine - coarse)
    if err > 0.05 * max(abs(fine), 1e-12) and err > 1e-10:
        raise NonconvergentTail(f"two-level WP difference {err:.3g} exceeds 5% of {fine:.6g}")
    return (fine, err) if return_error else fine


def w0(f: ConformalMap, n_quad: tuple[int, int] = (128, 256)) -> float:
    """Uniformization-independent ``wp_energy(f) + 4 pi ln|f'(0)|``."""
    return wp_energy(f, n_quad) + 4 * math.pi * math.log(abs(f.derivative_at_0))


def boundary_trace(f: ConformalMap, n: int = 256, r: float = 0.999):
    """Image polyline of the circle of radius ``r`` and the pushed-forward tangent data."""
    th = 2 * np.pi * np.arange(n) / n
    poly = f(r * np.exp(1j * th))
    curves.check_simple(poly)

    def value(t):
        z = r * np.exp(2j * np.pi * np.asarray(t, dtype=float))
        d = 1j * z * f.d1(z)
        return d / np.abs(d)

    return poly, curves.BoundaryData(value, "tangential", 1, {"source": "conformal_trace", "r": r})


def _distance_to_polyline(points: np.ndarray, poly: np.ndarray, block: int = 256) -> np.ndarray:
    a = poly
    b = np.roll(poly, -1)
    ab = b - a
    L2 = np.abs(ab) ** 2
    out = np.empty(points.shape, dtype=float)
    flat = points.ravel()
    res = out.ravel()
    for start in range(0, len(flat), block):
        p = flat[start:start + block, None]
        t = np.clip(((p - a) * np.conj(ab)).real / L2, 0.0, 1.0)
        res[start:start + block] = np.min(np.abs(p - (a + t * ab)), axis=1)
    return res.reshape(points.shape)


def koebe_check(f: ConformalMap, n: int = 1024, n_r: int = 24, n_t: int = 64) -> dict:
    """Worst multiplicative violation of the Koebe quarter/distortion bounds.

    ``d/(1-|z|^2) <= |f'(z)| <= 4 d/(1-|z|^2)`` with ``d = dist(f(z), boundary)``.
    A value <= 1 means both bounds hold on the sample grid.
    """
    th = 2 * np.pi * np.arange(n) / n
    poly = f(np.exp(1j * th))
    r = np.linspace(0.0, 0.95, n_r)
    z = (r[:, None] * np.exp(1j * 2 * np.pi * np.arange(n_t) / n_t)[None, :]).ravel()
    d = _distance_to_polyline(f(z), poly)
    scale = d / (1 - np.abs(z) ** 2)
    df = np.abs(f.d1(z))
    violation = np.maximum(scale / df, df / (4 * scale))
    return {"max_violation": float(violation.max()), "n_points": int(z.size)}


def map_from_json(obj: dict) -> ConformalMap:
    return ConformalMap.from_json(obj)
