"""Jordan boundary curves, S^1-valued boundary data and their diagnostics.

Points in the plane are complex numbers throughout.  Every curve is
parametrized over ``t in [0, 1)`` and is oriented counterclockwise.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from .errors import DegenerateTangent, SelfIntersection, UnresolvedWinding, ZeroChord

ComplexFn = Callable[[np.ndarray], np.ndarray]

# Quadrature nodes used by the Gaussian smoothing of curve joins.
_SMOOTH_NODES, _SMOOTH_WEIGHTS = np.polynomial.hermite_e.hermegauss(21)
_SMOOTH_WEIGHTS = _SMOOTH_WEIGHTS / _SMOOTH_WEIGHTS.sum()


@dataclass(frozen=True)
class JordanCurve:
    param: ComplexFn
    derivative: ComplexFn
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    tip: float | None = None

    def samples(self, n: int) -> np.ndarray:
        return self.param(np.arange(n) / n)

    def arclength_table(self, n: int) -> np.ndarray:
        """Cumulative polygonal length at ``t_k = k/n``, k = 0..n (closing edge included)."""
        pts = self.samples(n)
        edges = np.abs(np.roll(pts, -1) - pts)
        return np.concatenate([[0.0], np.cumsum(edges)])

    def length(self, n: int = 4096) -> float:
        return float(self.arclength_table(n)[-1])

    def signed_area(self, n: int = 4096) -> float:
        p = self.samples(n)
        q = np.roll(p, -1)
        return 0.5 * float(np.sum(p.real * q.imag - q.real * p.imag))

    def polyline(self, h: float, min_vertices: int = 16) -> np.ndarray:
        """Boundary samples with edge length close to ``h``."""
        n = max(min_vertices, int(math.ceil(self.length() / h)))
        return self.samples(n)


@dataclass(frozen=True)
class BoundaryData:
    value: ComplexFn
    kind: str
    degree_hint: int | None = None
    params: dict[str, Any] = field(default_factory=dict)

    def samples(self, n: int) -> np.ndarray:
        return self.value(np.arange(n) / n)

    def __call__(self, t: np.ndarray) -> np.ndarray:
        return self.value(np.asarray(t, dtype=float))


# ---------------------------------------------------------------------------
# curve catalog


def circle(radius: float = 1.0, center: complex = 0.0) -> JordanCurve:
    two_pi = 2.0 * np.pi

    def param(t):
        return center + radius * np.exp(1j * two_pi * np.asarray(t))

    def derivative(t):
        return 1j * two_pi * radius * np.exp(1j * two_pi * np.asarray(t))

    c = complex(center)
    return JordanCurve(param, derivative, "circle", {"radius": radius, "center": [c.real, c.imag]})


def analytic_curve(coefficients) -> JordanCurve:
    """Image of the unit circle under the polynomial ``sum c_k z^k``."""
    c = np.asarray(coefficients, dtype=complex)
    dc = c[1:] * np.arange(1, len(c))

    def param(t):
        z = np.exp(2j * np.pi * np.asarray(t))
        return np.polynomial.polynomial.polyval(z, c)

    def derivative(t):
        z = np.exp(2j * np.pi * np.asarray(t))
        return 2j * np.pi * z * np.polynomial.polynomial.polyval(z, dc)

    curve = JordanCurve(param, derivative, "analytic", {"coefficients": [[v.real, v.imag] for v in c]})
    check_simple(curve.samples(1024))
    return curve


def polyline_curve(vertices) -> JordanCurve:
    """Closed polygon parametrized proportionally to arclength."""
    v = np.asarray(vertices, dtype=complex)
    if v.ndim != 1:
        v = v[:, 0] + 1j * v[:, 1]
    edges = np.roll(v, -1) - v
    lengths = np.abs(edges)
    if np.any(lengths == 0.0):
        raise ZeroChord("polyline has repeated vertices")
    cum = np.concatenate([[0.0], np.cumsum(lengths)]) / lengths.sum()

    def locate(t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        k = np.clip(np.searchsorted(cum, t, side="right") - 1, 0, len(v) - 1)
        return k, (t - cum[k]) / (cum[k + 1] - cum[k])

    def param(t):
        k, s = locate(t)
        return v[k] + s * edges[k]

    def derivative(t):
        k, _ = locate(t)
        return edges[k] / (cum[k + 1] - cum[k])

    curve = JordanCurve(param, derivative, "polyline", {"vertices": [[p.real, p.imag] for p in v]})
    check_simple(v)
    if curve.signed_area() < 0:
        return polyline_curve(v[::-1])
    return curve


def square(side: float = 1.0, center: complex = 0.0) -> JordanCurve:
    s = side / 2.0
    corners = center + np.array([-s - 1j * s, s - 1j * s, s + 1j * s, -s + 1j * s])
    curve = polyline_curve(corners)
    return JordanCurve(curve.param, curve.derivative, "square", {"side": side})


def log_spiral_curve(t_min: float, smoothing: float = 0.0) -> JordanCurve:
    """Slow logarithmic spiral ``t e^{i ln ln(1/t)}`` closed by a circular arc.

    The spiral runs from the outer endpoint at radius ``t_max = 1/e`` to the tip
    at radius ``t_min``; the closing arc lies on a circle of radius ``t_max``
    through both endpoints, on the side of the origin.  ``smoothing`` is the
    Gaussian width (in curve parameter) used to round the two joins.
    """
    t_max = math.exp(-1.0)
    if not 0.0 < t_min < t_max:
        raise ValueError("t_min must lie in (0, 1/e)")
    if smoothing < 0:
        raise ValueError("smoothing must be nonnegative")

    def spiral(rho):
        return rho * np.exp(1j * np.log(np.log(1.0 / rho)))

    def spiral_drho(rho):
        phi_prime = -1.0 / (rho * np.log(1.0 / rho))
        return np.exp(1j * np.log(np.log(1.0 / rho))) * (1.0 + 1j * rho * phi_prime)

    A = complex(spiral(np.array([t_max]))[0])
    B = complex(spiral(np.array([t_min]))[0])
    chord = abs(B - A)
    R = t_max
    if chord < 1e-9 or chord >= 2 * R:
        raise SelfIntersection("spiral endpoints too close for a circular closure")
    mid = 0.5 * (A + B)
    normal = 1j * (B - A) / chord
    if (0.0 - mid).real * normal.real + (0.0 - mid).imag * normal.imag < 0:
        normal = -normal
    center = mid + normal * math.sqrt(R * R - 0.25 * chord * chord)
    beta_B = np.angle(B - center)
    beta_A = np.angle(A - center)
    # sweep from B to A the long way around (away from the spiral side)
    sweep = (beta_A - beta_B) % (2 * np.pi)
    probe = center + R * np.exp(1j * (beta_B + 0.5 * sweep))
    if abs(probe - mid) < abs(center - mid):
        sweep = sweep - 2 * np.pi
    log_ratio = math.log(t_min / t_max)

    lam = np.linspace(0.0, 1.0, 2049)
    L_spiral = float(np.sum(np.abs(np.diff(spiral(t_max * np.exp(lam * log_ratio))))))
    L_arc = abs(sweep) * R
    split = L_spiral / (L_spiral + L_arc)

    def raw(t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        out = np.empty(t.shape, dtype=complex)
        on_spiral = t < split
        lam_s = t[on_spiral] / split
        out[on_spiral] = spiral(t_max * np.exp(lam_s * log_ratio))
        mu = (t[~on_spiral] - split) / (1.0 - split)
        out[~on_spiral] = center + R * np.exp(1j * (beta_B + mu * sweep))
        return out

    def raw_derivative(t):
        t = np.mod(np.asarray(t, dtype=float), 1.0)
        out = np.empty(t.shape, dtype=complex)
        on_spiral = t < split
        lam_s = t[on_spiral] / split
        rho = t_max * np.exp(lam_s * log_ratio)
        out[on_spiral] = spiral_drho(rho) * rho * log_ratio / split
        mu = (t[~on_spiral] - split) / (1.0 - split)
        out[~on_spiral] = 1j * R * sweep / (1.0 - split) * np.exp(1j * (beta_B + mu * sweep))
        return out

    def smoothed(fn):
        if smoothing == 0.0:
            return fn

        def inner(t):
            t = np.asarray(t, dtype=float)
            out = fn(t)
            tt = np.mod(t, 1.0)
            dist = np.minimum.reduce([tt, 1.0 - tt, np.abs(tt - split)])
            near = dist < 4.0 * smoothing
            if np.any(near):
                shifted = tt[near][:, None] + smoothing * _SMOOTH_NODES[None, :]
                out[near] = fn(shifted) @ _SMOOTH_WEIGHTS
            return out

        return inner

    param = smoothed(raw)
    derivative = smoothed(raw_derivative)
    curve = JordanCurve(
        param, derivative, "log_spiral",
        {"t_min": t_min, "t_max": t_max, "smoothing": smoothing, "split": split},
        tip=split,
    )
    check_simple(curve.samples(2048))
    if curve.signed_area() < 0:
        rev = JordanCurve(
            lambda t: param(1.0 - np.asarray(t, dtype=float)),
            lambda t: -derivative(1.0 - np.asarray(t, dtype=float)),
            "log_spiral", dict(curve.params), tip=1.0 - split,
        )
        return rev
    return curve


# ---------------------------------------------------------------------------
# geometry checks


def _segments_cross(p0, p1, q0, q1) -> np.ndarray:
    def orient(a, b, c):
        return np.sign((b - a).real * (c - a).imag - (b - a).imag * (c - a).real)

    o1 = orient(p0, p1, q0)
    o2 = orient(p0, p1, q1)
    o3 = orient(q0, q1, p0)
    o4 = orient(q0, q1, p1)
    return (o1 * o2 < 0) & (o3 * o4 < 0)


def check_simple(points: np.ndarray, block: int = 512) -> None:
    """Raise SelfIntersection when the closed polyline crosses itself."""
    p = np.asarray(points, dtype=complex)
    n = len(p)
    a, b = p, np.roll(p, -1)
    idx = np.arange(n)
    for start in range(0, n, block):
        rows = idx[start:start + block]
        hit = _segments_cross(a[rows, None], b[rows, None], a[None, :], b[None, :])
        gap = np.abs(rows[:, None] - idx[None, :])
        gap = np.minimum(gap, n - gap)
        hit &= gap > 1
        if np.any(hit):
            i, j = np.argwhere(hit)[0]
            raise SelfIntersection(f"edges {rows[i]} and {j} cross")


# ---------------------------------------------------------------------------
# boundary data


def tangent_data(curve: JordanCurve, n_check: int = 512) -> BoundaryData:
    """Unit tangent field; (outward normal, tangent) is a direct frame."""
    t = np.arange(n_check) / n_check
    speed = np.abs(curve.derivative(t))
    bad = speed < 1e-12
    if curve.tip is not None:
        bad &= np.abs(t - curve.tip) > 2.0 / n_check
    if np.any(bad):
        raise DegenerateTangent(f"derivative vanishes near t={t[bad][0]:.6f}")

    def value(t):
        d = curve.derivative(np.asarray(t, dtype=float))
        return d / np.abs(d)

    return BoundaryData(value, "tangential", 1, {"curve": curve.kind})


def power_data(degree: int, rotation: float = 0.0, phase_amplitude: float = 0.0,
               phase_frequency: int = 1) -> BoundaryData:
    """``e^{i(d theta + rotation + A sin(k theta))}`` with ``theta = 2 pi t``."""

    def value(t):
        theta = 2.0 * np.pi * np.asarray(t, dtype=float)
        return np.exp(1j * (degree * theta + rotation + phase_amplitude * np.sin(phase_frequency * theta)))

    params = {"degree": degree, "rotation": rotation, "phase_amplitude": phase_amplitude,
              "phase_frequency": phase_frequency}
    return BoundaryData(value, "power", degree, params)


def tabulated_data(samples, degree_hint: int | None = None) -> BoundaryData:
    """Data known at ``t_k = k/n``; interpolated linearly in the lifted phase."""
    g = np.asarray(samples, dtype=complex)
    g = g / np.abs(g)
    n = len(g)
    phase = np.unwrap(np.angle(np.concatenate([g, g[:1]])))

    def value(t):
        s = np.mod(np.asarray(t, dtype=float), 1.0) * n
        return np.exp(1j * np.interp(s, np.arange(n + 1), phase))

    return BoundaryData(value, "tabulated", degree_hint, {"n": n})


def rotate_data(data: BoundaryData, alpha: float) -> BoundaryData:
    rot = np.exp(1j * alpha)
    params = dict(data.params, rotation_applied=alpha)
    return BoundaryData(lambda t: rot * data.value(t), data.kind, data.degree_hint, params)


# ---------------------------------------------------------------------------
# diagnostics


def _as_samples(data, n: int) -> np.ndarray:
    if isinstance(data, BoundaryData):
        return data.samples(n)
    g = np.asarray(data, dtype=complex)
    return g


def degree(data: BoundaryData | np.ndarray, n_quad: int = 1024) -> int:
    """Winding number ``(1/2pi) \\oint g ^ g_theta`` of S^1-valued data.

    Each cell uses the midpoint rule with the difference quotient of the two
    endpoint samples, i.e. ``2 sin(alpha/2)`` for an angle increment ``alpha``.
    """
    g = _as_samples(data, n_quad)
    if len(g) < 256:
        raise ValueError("degree needs at least 256 samples")
    g = g / np.abs(g)
    g_next = np.roll(g, -1)
    increments = np.angle(g_next * np.conj(g))
    worst = np.max(np.abs(increments))
    if worst >= np.pi / 2:
        raise UnresolvedWinding(f"adjacent samples differ by {worst:.3f} rad; refine the grid")
    mid = g + g_next
    mid = mid / np.abs(mid)
    wedge = np.imag(np.conj(mid) * (g_next - g))
    raw = float(np.sum(wedge)) / (2.0 * np.pi)
    nearest = round(raw)
    if abs(raw - nearest) > 0.25:
        raise UnresolvedWinding(f"quadrature value {raw:.4f} is not close to an integer")
    return int(nearest)


def h_half_seminorm(data: BoundaryData, curve: JordanCurve, n: int = 512,
                    diagonal: str = "fill", block: int = 256) -> float:
    """Double arclength integral of ``|g(x)-g(y)|^2 / |x-y|^2`` (product midpoint rule).

    Cells with ``|i-j| <= 1 (mod n)`` are singular.  ``diagonal="skip"`` drops
    them; ``"fill"`` assigns them the difference quotient
    ``|g_{i+1}-g_{i-1}|^2 / |x_{i+1}-x_{i-1}|^2``, which approximates the
    diagonal limit ``|dg/ds|^2``.
    """
    if n < 512:
        warnings.warn("h_half_seminorm: n < 512, quadrature is under-resolved", stacklevel=2)
    t = (np.arange(n) + 0.5) / n
    x = curve.param(t)
    ds = np.abs(curve.derivative(t)) / n
    g = data.value(t)
    idx = np.arange(n)
    total = 0.0
    for start in range(0, n, block):
        rows = idx[start:start + block]
        gap = np.abs(rows[:, None] - idx[None, :])
        gap = np.minimum(gap, n - gap)
        far = gap > 1
        num = np.abs(g[rows, None] - g[None, :]) ** 2
        den = np.abs(x[rows, None] - x[None, :]) ** 2
        vals = np.where(far, num / np.where(far, den, 1.0), 0.0)
        total += float(np.sum(vals * ds[rows, None] * ds[None, :]))
    if diagonal == "fill":
        gp, gm = np.roll(g, -1), np.roll(g, 1)
        xp, xm = np.roll(x, -1), np.roll(x, 1)
        fill = np.abs(gp - gm) ** 2 / np.abs(xp - xm) ** 2
        ds_next, ds_prev = np.roll(ds, -1), np.roll(ds, 1)
        total += float(np.sum(fill * ds * (ds + ds_next + ds_prev)))
    elif diagonal != "skip":
        raise ValueError("diagonal must be 'fill' or 'skip'")
    return total


def chord_arc_constant(curve: JordanCurve, n: int = 4096, block: int = 512) -> float:
    """Max of (shorter arc length)/(chord) over sample pairs."""
    pts = curve.samples(n)
    s = curve.arclength_table(n)
    total = s[-1]
    s = s[:-1]
    idx = np.arange(n)
    worst = 1.0
    for start in range(0, n, block):
        rows = idx[start:start + block]
        mask = idx[None, :] > rows[:, None]
        arc = np.abs(s[None, :] - s[rows, None])
        arc = np.minimum(arc, total - arc)
        chord = np.abs(pts[None, :] - pts[rows, None])
        if np.any(mask & (chord < 1e-14 * total)):
            raise ZeroChord("two distinct samples coincide")
        ratio = np.where(mask, arc / np.where(mask, chord, 1.0), 0.0)
        worst = max(worst, float(ratio.max()))
    return worst


# ---------------------------------------------------------------------------
# serialization


def curve_to_json(curve: JordanCurve, n_samples: int = 512) -> dict:
    pts = curve.samples(n_samples)
    return {
        "kind": curve.kind,
        "params": curve.params,
        "n_samples": n_samples,
        "samples": [[float(p.real), float(p.imag)] for p in pts],
    }


def curve_from_json(obj: dict) -> JordanCurve:
    kind, params = obj["kind"], obj.get("params", {})
    if kind == "circle":
        c = params.get("center", [0.0, 0.0])
        return circle(params.get("radius", 1.0), complex(c[0], c[1]))
    if kind == "analytic":
        return analytic_curve([complex(a, b) for a, b in params["coefficients"]])
    if kind == "log_spiral":
        return log_spiral_curve(params["t_min"], params.get("smoothing", 0.0))
    if kind == "square":
        return square(params.get("side", 1.0))
    pts = np.asarray(obj["samples"], dtype=float)
    return polyline_curve(pts[:, 0] + 1j * pts[:, 1])


def data_to_json(data: BoundaryData, n_samples: int = 512) -> dict:
    g = data.samples(n_samples)
    return {
        "kind": data.kind,
        "degree_hint": data.degree_hint,
        "params": {k: v for k, v in data.params.items() if isinstance(v, (int, float, str))},
        "samples": [[float(v.real), float(v.imag)] for v in g],
    }


def data_from_json(obj: dict) -> BoundaryData:
    pts = np.asarray(obj["samples"], dtype=float)
    return tabulated_data(pts[:, 0] + 1j * pts[:, 1], obj.get("degree_hint"))
