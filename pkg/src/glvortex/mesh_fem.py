"""Triangulation of Jordan domains and P1 finite elements for Ginzburg-Landau energies.

Fields are complex-valued per-vertex arrays.  Energies follow the convention
``E_eps(u) = 1/2 int |grad u|^2 + 1/(4 eps^2) int (1 - |u|^2)^2``.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import NamedTuple

import matplotlib.tri as mtri
import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
import triangle

from . import curves
from .conformal import _distance_to_polyline
from .errors import MeshFailure, SelfIntersection, SolverFailure, TooCloseToBoundary

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class TriMesh:
    vertices: np.ndarray  # complex, shape (N,)
    triangles: np.ndarray  # int, shape (M, 3), counterclockwise
    boundary_loop: np.ndarray  # ordered boundary vertex indices, counterclockwise
    h: float
    boundary_param: np.ndarray | None = None  # curve parameter t of each boundary_loop vertex

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @cached_property
    def signed_areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        return 0.5 * np.imag(np.conj(p[:, 1] - p[:, 0]) * (p[:, 2] - p[:, 0]))

    @property
    def area(self) -> float:
        return float(self.signed_areas.sum())

    @cached_property
    def basis_gradients(self) -> np.ndarray:
        """Complex gradients ``d/dx + i d/dy`` of the three hat functions per triangle."""
        p = self.vertices[self.triangles]
        two_a = 2.0 * self.signed_areas[:, None]
        opposite = np.stack([p[:, 2] - p[:, 1], p[:, 0] - p[:, 2], p[:, 1] - p[:, 0]], axis=1)
        return 1j * opposite / two_a

    @cached_property
    def min_angle(self) -> float:
        p = self.vertices[self.triangles]
        angles = []
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            angles.append(np.abs(np.angle(b / a)))
        return float(np.degrees(np.min(angles)))

    @property
    def quality(self) -> float:
        return self.min_angle

    @cached_property
    def stiffness(self) -> sp.csr_matrix:
        g = self.basis_gradients
        area = self.signed_areas
        rows, cols, vals = [], [], []
        for i in range(3):
            for j in range(3):
                rows.append(self.triangles[:, i])
                cols.append(self.triangles[:, j])
                vals.append(area * np.real(g[:, i] * np.conj(g[:, j])))
        n = self.n_vertices
        K = sp.coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n))
        return K.tocsr()

    @cached_property
    def lumped_mass(self) -> np.ndarray:
        w = np.zeros(self.n_vertices)
        np.add.at(w, self.triangles.ravel(), np.repeat(self.signed_areas / 3.0, 3))
        return w

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.n_vertices, dtype=bool)
        mask[self.boundary_loop] = True
        return mask

    @cached_property
    def interior(self) -> np.ndarray:
        return np.flatnonzero(~self.boundary_mask)

    @cached_property
    def triangulation(self) -> mtri.Triangulation:
        return mtri.Triangulation(self.vertices.real, self.vertices.imag, self.triangles)

    @cached_property
    def boundary_polyline(self) -> np.ndarray:
        return self.vertices[self.boundary_loop]

    def distance_to_boundary(self, points) -> np.ndarray:
        return _distance_to_polyline(np.asarray(points, dtype=complex), self.boundary_polyline)

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Containing triangle (-1 outside) and barycentric coordinates."""
        pts = np.asarray(points, dtype=complex).ravel()
        finder = self.__dict__.get("_finder")
        if finder is None:
            finder = self.triangulation.get_trifinder()
            self.__dict__["_finder"] = finder
        tri = np.asarray(finder(pts.real, pts.imag))
        bary = np.zeros((len(pts), 3))
        ok = tri >= 0
        if np.any(ok):
            p = self.vertices[self.triangles[tri[ok]]]
            area = self.signed_areas[tri[ok]]
            for i in range(3):
                a, b = p[:, (i + 1) % 3], p[:, (i + 2) % 3]
                bary[ok, i] = 0.5 * np.imag(np.conj(a - pts[ok]) * (b - pts[ok])) / area
        return tri, bary

    def interpolate(self, values, points, extrapolate: bool = True) -> np.ndarray:
        """P1 interpolation of vertex values at arbitrary points.

        Points outside the mesh use the barycentric formula of the triangle
        with the nearest centroid when ``extrapolate`` is set, else NaN.
        """
        values = np.asarray(values)
        pts = np.asarray(points, dtype=complex)
        flat = pts.ravel()
        tri, bary = self.locate(flat)
        out = np.full(flat.shape, np.nan, dtype=np.result_type(values, float))
        ok = tri >= 0
        out[ok] = np.sum(values[self.triangles[tri[ok]]] * bary[ok], axis=1)
        if extrapolate and not np.all(ok):
            miss = ~ok
            centroids = self.vertices[self.triangles].mean(axis=1)
            tree = self.__dict__.get("_centroid_tree")
            if tree is None:
                from scipy.spatial import cKDTree

                tree = cKDTree(np.column_stack([centroids.real, centroids.imag]))
                self.__dict__["_centroid_tree"] = tree
            _, near = tree.query(np.column_stack([flat[miss].real, flat[miss].imag]))
            p = self.vertices[self.triangles[near]]
            area = self.signed_areas[near]
            b = np.stack([0.5 * np.imag(np.conj(p[:, (i + 1) % 3] - flat[miss]) * (p[:, (i + 2) % 3] - flat[miss])) / area
                          for i in range(3)], axis=1)
            out[miss] = np.sum(values[self.triangles[near]] * b, axis=1)
        return out.reshape(pts.shape)

    def to_json(self) -> dict:
        obj = {
            "vertices": [[float(v.real), float(v.imag)] for v in self.vertices],
            "triangles": self.triangles.tolist(),
            "boundary_loop": self.boundary_loop.tolist(),
            "h": self.h,
        }
        if self.boundary_param is not None:
            obj["boundary_param"] = [float(t) for t in self.boundary_param]
        return obj

    @classmethod
    def from_json(cls, obj: dict) -> "TriMesh":
        v = np.asarray(obj["vertices"], dtype=float)
        bp = obj.get("boundary_param")
        return cls(v[:, 0] + 1j * v[:, 1], np.asarray(obj["triangles"], dtype=int),
                   np.asarray(obj["boundary_loop"], dtype=int), float(obj.get("h", 0.0)),
                   None if bp is None else np.asarray(bp, dtype=float))


@dataclass
class P1Field:
    values: np.ndarray  # complex per-vertex
    dirichlet_mask: np.ndarray = field(default=None)

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.dirichlet_mask is None:
            self.dirichlet_mask = np.zeros(len(self.values), dtype=bool)

    def copy(self) -> "P1Field":
        return P1Field(self.values.copy(), self.dirichlet_mask.copy())

    def to_json(self) -> dict:
        return {
            "values": [[float(v.real), float(v.imag)] for v in self.values],
            "dirichlet_mask": [int(b) for b in self.dirichlet_mask],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "P1Field":
        v = np.asarray(obj["values"], dtype=float)
        mask = obj.get("dirichlet_mask")
        return cls(v[:, 0] + 1j * v[:, 1], None if mask is None else np.asarray(mask, dtype=bool))


# ---------------------------------------------------------------------------
# meshing


def _resample(polyline: np.ndarray, h: float):
    """Subdivide every edge to length <= h; return points and their polyline parameter."""
    n = len(polyline)
    pts, params = [], []
    for k in range(n):
        a, b = polyline[k], polyline[(k + 1) % n]
        m = max(1, int(math.ceil(abs(b - a) / h - 1e-9)))
        s = np.arange(m) / m
        pts.append(a + s * (b - a))
        params.append((k + s) / n)
    return np.concatenate(pts), np.concatenate(params)


def _boundary_cycle(triangles: np.ndarray) -> np.ndarray:
    edges = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]])
    key = np.sort(edges, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    boundary = edges[counts[inv.ravel()] == 1]  # oriented with the interior on the left
    nxt = dict(zip(boundary[:, 0].tolist(), boundary[:, 1].tolist()))
    if len(nxt) != len(boundary):
        raise MeshFailure("boundary is not a single manifold cycle")
    start = int(boundary[0, 0])
    loop = [start]
    cur = nxt[start]
    while cur != start:
        loop.append(cur)
        cur = nxt[cur]
        if len(loop) > len(boundary):
            raise MeshFailure("boundary walk did not close")
    if len(loop) != len(boundary):
        raise MeshFailure("boundary consists of several cycles")
    return np.asarray(loop)


def triangulate(polyline, h: float, min_angle: float = 20.0, param=None) -> TriMesh:
    """Quality Delaunay triangulation of the region bounded by ``polyline``.

    ``param`` optionally gives the curve parameter of each polyline vertex; it
    is carried to every boundary vertex of the mesh.
    """
    poly = np.asarray(polyline, dtype=complex)
    if len(poly) < 16:
        raise MeshFailure("polyline needs at least 16 vertices")
    try:
        curves.check_simple(poly)
    except SelfIntersection as exc:
        raise MeshFailure(f"input polyline is not simple: {exc}") from exc
    area2 = np.sum(poly.real * np.roll(poly.imag, -1) - np.roll(poly.real, -1) * poly.imag)
    if area2 < 0:
        poly = poly[::-1]
        if param is not None:
            param = np.asarray(param)[::-1]
    pts, s = _resample(poly, h)
    n = len(pts)
    segs = np.column_stack([np.arange(n), (np.arange(n) + 1) % n])
    max_area = math.sqrt(3.0) / 4.0 * h * h
    # fixed-point formatting: the switch parser does not read exponents
    out = triangle.triangulate(
        {"vertices": np.column_stack([pts.real, pts.imag]), "segments": segs},
        f"pq{min_angle:g}a{max_area:.15f}Q",
    )
    verts = out["vertices"][:, 0] + 1j * out["vertices"][:, 1]
    tris = np.asarray(out["triangles"], dtype=int)
    p = verts[tris]
    signed = np.imag(np.conj(p[:, 1] - p[:, 0]) * (p[:, 2] - p[:, 0]))
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    loop = _boundary_cycle(tris)
    mesh = TriMesh(verts, tris, loop, h)
    if np.any(mesh.signed_areas <= 0):
        raise MeshFailure("degenerate triangle")
    if mesh.min_angle < min_angle - 1e-6:
        raise MeshFailure(f"min angle {mesh.min_angle:.2f} < {min_angle}")
    # carry the curve parameter to the boundary vertices
    bp = verts[loop]
    seg_a = poly
    seg_b = np.roll(poly, -1)

    if np.max(_distance_to_polyline(bp, poly)) > h:
        raise MeshFailure("boundary loop departs from the input polyline")
    t_out = np.empty(len(bp))
    for start in range(0, len(bp), 256):
        q = bp[start:start + 256, None]
        ab = seg_b - seg_a
        frac = np.clip(((q - seg_a) * np.conj(ab)).real / np.abs(ab) ** 2, 0.0, 1.0)
        dist = np.abs(q - (seg_a + frac * ab))
        k = np.argmin(dist, axis=1)
        f = frac[np.arange(len(k)), k]
        if param is None:
            t_out[start:start + 256] = (k + f) / len(poly)
        else:
            t0 = np.asarray(param)[k]
            t1 = np.asarray(param)[(k + 1) % len(poly)]
            dt = np.mod(t1 - t0, 1.0)
            t_out[start:start + 256] = np.mod(t0 + f * dt, 1.0)
    mesh.boundary_param = t_out
    return mesh


def mesh_curve(curve: curves.JordanCurve, h: float, min_angle: float = 20.0) -> TriMesh:
    """Mesh the interior of a catalog curve; boundary vertices carry the curve parameter."""
    n = max(16, int(math.ceil(curve.length() / h)))
    t = np.arange(n) / n
    return triangulate(curve.param(t), h, min_angle, param=t)


# ---------------------------------------------------------------------------
# energies


class GLEnergy(NamedTuple):
    total: float
    dirichlet_part: float
    potential_part: float


def _values(field) -> np.ndarray:
    return field.values if isinstance(field, P1Field) else np.asarray(field, dtype=complex)


def triangle_gradients(mesh: TriMesh, values) -> tuple[np.ndarray, np.ndarray]:
    """Per-triangle ``(d_x u, d_y u)`` of the P1 interpolant."""
    u = _values(values)[mesh.triangles]
    g = mesh.basis_gradients
    return np.sum(u * g.real, axis=1), np.sum(u * g.imag, axis=1)


def dirichlet_energy(mesh: TriMesh, field) -> float:
    ux, uy = triangle_gradients(mesh, field)
    return 0.5 * float(np.sum((np.abs(ux) ** 2 + np.abs(uy) ** 2) * mesh.signed_areas))


def potential_energy(mesh: TriMesh, field, eps: float) -> float:
    u = _values(field)
    return float(np.sum(mesh.lumped_mass * (1.0 - np.abs(u) ** 2) ** 2)) / (4.0 * eps * eps)


def gl_energy(mesh: TriMesh, field, eps: float) -> GLEnergy:
    if eps <= 0:
        raise ValueError("eps must be positive")
    d = dirichlet_energy(mesh, field)
    p = potential_energy(mesh, field, eps)
    return GLEnergy(d + p, d, p)


def gl_gradient_values(mesh: TriMesh, u: np.ndarray, eps: float) -> np.ndarray:
    """``K u - w (1 - |u|^2) u / eps^2``; the directional derivative is ``Re <g, d>``."""
    K = mesh.stiffness
    return K @ u - mesh.lumped_mass * (1.0 - np.abs(u) ** 2) * u / (eps * eps)


def gl_gradient(mesh: TriMesh, field: P1Field, eps: float) -> P1Field:
    g = gl_gradient_values(mesh, field.values, eps)
    g[field.dirichlet_mask] = 0.0
    return P1Field(g, field.dirichlet_mask.copy())


# ---------------------------------------------------------------------------
# linear solves


def _interior_system(mesh: TriMesh, boundary_values: np.ndarray):
    n = mesh.n_vertices
    ub = np.zeros(n, dtype=complex)
    ub[mesh.boundary_loop] = boundary_values
    I = mesh.interior
    K = mesh.stiffness
    Kii = K[I][:, I].tocsr()
    rhs = -(K[I] @ ub)
    return ub, I, Kii, rhs


def solve_laplace_dirichlet(mesh: TriMesh, boundary_values, tol: float = 1e-10) -> P1Field:
    """Discrete harmonic extension of values given on ``mesh.boundary_loop``."""
    bv = np.asarray(boundary_values, dtype=complex)
    if bv.shape != (len(mesh.boundary_loop),):
        raise ValueError("boundary_values must align with mesh.boundary_loop")
    u, I, Kii, rhs = _interior_system(mesh, bv)
    diag = Kii.diagonal()
    precond = spla.LinearOperator(Kii.shape, matvec=lambda x: x / diag)
    parts = []
    for comp in (rhs.real, rhs.imag):
        if not np.any(comp):
            parts.append(np.zeros_like(comp))
            continue
        x, info = spla.cg(Kii, comp, rtol=tol, atol=0.0, maxiter=20 * len(comp), M=precond)
        if info != 0:
            raise SolverFailure(f"CG did not converge (info={info})")
        parts.append(x)
    u[I] = parts[0] + 1j * parts[1]
    mask = mesh.boundary_mask.copy()
    return P1Field(u, mask)


def boundary_values_from_data(mesh: TriMesh, data: curves.BoundaryData) -> np.ndarray:
    """Data at the boundary vertices (via their curve parameter), projected to S^1."""
    if mesh.boundary_param is None:
        raise ValueError("mesh has no boundary parametrization")
    g = data.value(mesh.boundary_param)
    return g / np.abs(g)


@dataclass
class GreenResult:
    regular: P1Field  # harmonic part h with G = ln|x - a| + h
    a: complex
    mass: float

    def __call__(self, mesh: TriMesh, points) -> np.ndarray:
        pts = np.asarray(points, dtype=complex)
        return np.log(np.abs(pts - self.a)) + mesh.interpolate(self.regular.values.real, pts)

    def values(self, mesh: TriMesh) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return np.log(np.abs(mesh.vertices - self.a)) + self.regular.values.real


def green_dirichlet_fem(mesh: TriMesh, a: complex) -> GreenResult:
    """Dirichlet Green function ``ln|x - a| + h``; the mass is ``h(a)``."""
    a = complex(a)
    tri, _ = mesh.locate(np.array([a]))
    if tri[0] < 0:
        raise TooCloseToBoundary("pole lies outside the mesh")
    d = float(mesh.distance_to_boundary(np.array([a]))[0])
    if d <= 2 * mesh.h:
        raise TooCloseToBoundary(f"distance {d:.4g} to boundary is <= 2h")
    bv = -np.log(np.abs(mesh.boundary_polyline - a))
    h = solve_laplace_dirichlet(mesh, bv.astype(complex))
    h.values = h.values.real.astype(complex)
    mass = float(mesh.interpolate(h.values.real, np.array([a]))[0])
    return GreenResult(h, a, mass)
