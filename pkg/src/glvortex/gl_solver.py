"""Minimization of the Ginzburg-Landau energy with Dirichlet data, and vortex diagnostics."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from . import curves
from .errors import NonMonotone
from .mesh_fem import GLEnergy, P1Field, TriMesh, boundary_values_from_data, gl_energy, \
    gl_gradient_values, solve_laplace_dirichlet

logger = logging.getLogger(__name__)


@dataclass
class GLConfig:
    eps_schedule: tuple = (0.2, 0.1, 0.05)
    max_iters: int = 5000
    grad_tol: float = 1e-8
    armijo_c: float = 1e-4
    armijo_shrink: float = 0.5
    init: str = "harmonic"  # harmonic | prior | canonical
    eta0: float = 1.0
    j0: int = 4
    gap_band: float = 2.0
    restart_every: int = 50

    def __post_init__(self):
        eps = [float(e) for e in self.eps_schedule]
        if not eps or any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
            raise ValueError("eps_schedule must be strictly decreasing and positive")
        self.eps_schedule = tuple(eps)
        if self.init not in ("harmonic", "prior", "canonical"):
            raise ValueError(f"unknown init {self.init!r}")


@dataclass
class GLSolution:
    mesh: TriMesh
    field: P1Field
    eps: float
    energy: GLEnergy
    iterations: int
    converged: bool
    grad_norm: float
    history: list = field(default_factory=list)

    @property
    def values(self) -> np.ndarray:
        return self.field.values

    def to_json(self) -> dict:
        return {
            "eps": self.eps,
            "energy": self.energy._asdict(),
            "iterations": self.iterations,
            "converged": self.converged,
            "grad_norm": self.grad_norm,
            "field": self.field.to_json(),
        }


# ---------------------------------------------------------------------------
# initial fields


def dirichlet_field(mesh: TriMesh, data: curves.BoundaryData) -> P1Field:
    """Zero field carrying the projected boundary data on the boundary vertices."""
    u = np.zeros(mesh.n_vertices, dtype=complex)
    u[mesh.boundary_loop] = boundary_values_from_data(mesh, data)
    return P1Field(u, mesh.boundary_mask.copy())


def harmonic_init(mesh: TriMesh, data: curves.BoundaryData) -> P1Field:
    """Harmonic extension with unit modulus wherever ``|u| >= 1/2``, tapered near its zeros."""
    bv = boundary_values_from_data(mesh, data)
    u = solve_laplace_dirichlet(mesh, bv)
    m = np.abs(u.values)
    scale = np.minimum(1.0, 2.0 * m) / np.maximum(m, 1e-300)
    v = u.values * scale
    v[mesh.boundary_loop] = bv
    return P1Field(v, mesh.boundary_mask.copy())


def canonical_init(mesh: TriMesh, data: curves.BoundaryData, u_map, a: complex, eps: float) -> P1Field:
    """``u_map(x) * min(|x - a| / eps, 1)`` with the boundary data imposed exactly."""
    x = mesh.vertices
    v = np.asarray(u_map(x), dtype=complex) * np.minimum(np.abs(x - a) / eps, 1.0)
    v[mesh.boundary_loop] = boundary_values_from_data(mesh, data)
    return P1Field(v, mesh.boundary_mask.copy())


# ---------------------------------------------------------------------------
# minimization


def _quartic_coefficients(mesh: TriMesh, u: np.ndarray, d: np.ndarray, Ku: np.ndarray, eps: float):
    """Coefficients ``c1..c4`` of ``E(u + t d) - E(u)`` (exact for the discrete energy)."""
    w = mesh.lumped_mass
    s = 1.0 - np.abs(u) ** 2
    p = 2.0 * np.real(np.conj(u) * d)
    m = np.abs(d) ** 2
    Kd = mesh.stiffness @ d
    k = 1.0 / (4.0 * eps * eps)
    c1 = float(np.real(np.vdot(Ku, d))) - 2.0 * k * float(np.sum(w * s * p))
    c2 = 0.5 * float(np.real(np.vdot(d, Kd))) + k * float(np.sum(w * (p * p - 2.0 * s * m)))
    c3 = 2.0 * k * float(np.sum(w * p * m))
    c4 = k * float(np.sum(w * m * m))
    return c1, c2, c3, c4


def _quartic_min(c1, c2, c3, c4) -> float:
    """Smallest-energy positive critical point of ``c1 t + c2 t^2 + c3 t^3 + c4 t^4``."""
    roots = np.roots([4 * c4, 3 * c3, 2 * c2, c1])
    real = roots[np.abs(roots.imag) <= 1e-10 * np.maximum(1.0, np.abs(roots))].real
    real = real[real > 0]
    if real.size == 0:
        return 0.0
    vals = ((c4 * real + c3) * real + c2) * real * real + c1 * real
    return float(real[np.argmin(vals)])


class _Preconditioner:
    """``(K_II + diag(w_I)/eps^2)^{-1}``, applied to real and imaginary parts."""

    def __init__(self, mesh: TriMesh, eps: float):
        I = mesh.interior
        A = mesh.stiffness[I][:, I] + sp.diags(mesh.lumped_mass[I] / (eps * eps))
        self.lu = spla.splu(A.tocsc())

    def __call__(self, g: np.ndarray) -> np.ndarray:
        x = self.lu.solve(np.column_stack([g.real, g.imag]))
        return x[:, 0] + 1j * x[:, 1]


def minimize(mesh: TriMesh, data: curves.BoundaryData | None, eps: float, config: GLConfig | None = None,
             init_field: P1Field | None = None) -> GLSolution:
    """Preconditioned nonlinear conjugate gradients (Polak-Ribiere+, restarts) on ``E_eps``.

    The line search takes the exact minimizer of the quartic ``t -> E(u + t d)``
    and backtracks until the Armijo condition holds.  Boundary values of the
    initial field are never modified.
    """
    config = config or GLConfig(eps_schedule=(eps,))
    if eps <= 0:
        raise ValueError("eps must be positive")
    if mesh.h > eps / 3:
        logger.warning("mesh size h=%.4g exceeds eps/3=%.4g: vortex core under-resolved", mesh.h, eps / 3)
    if init_field is None:
        if data is None:
            raise ValueError("need boundary data or an initial field")
        init_field = harmonic_init(mesh, data)
    fld = init_field.copy()
    if not np.array_equal(fld.dirichlet_mask, mesh.boundary_mask):
        fld.dirichlet_mask = fld.dirichlet_mask | mesh.boundary_mask
    mask = fld.dirichlet_mask
    free = np.flatnonzero(~mask)
    u = fld.values
    K = mesh.stiffness
    precond = _Preconditioner(mesh, eps) if np.array_equal(free, mesh.interior) else None

    def grad(u):
        Ku = K @ u
        g = Ku - mesh.lumped_mass * (1.0 - np.abs(u) ** 2) * u / (eps * eps)
        return Ku, g[free]

    def apply_p(g):
        return precond(g) if precond is not None else g

    energy = gl_energy(mesh, u, eps).total
    history = [energy]
    Ku, g = grad(u)
    z = apply_p(g)
    d = -z
    gz_old = float(np.real(np.vdot(g, z)))
    converged = False
    it = 0
    gnorm = float(np.linalg.norm(g))
    for it in range(1, config.max_iters + 1):
        if gnorm <= config.grad_tol * (1.0 + abs(energy)):
            converged = True
            it -= 1
            break
        full_d = np.zeros_like(u)
        full_d[free] = d
        c1, c2, c3, c4 = _quartic_coefficients(mesh, u, full_d, Ku, eps)
        if c1 >= 0:  # not a descent direction: restart along the preconditioned gradient
            d = -z
            full_d[free] = d
            c1, c2, c3, c4 = _quartic_coefficients(mesh, u, full_d, Ku, eps)
            if c1 >= 0:
                break
        t = _quartic_min(c1, c2, c3, c4)
        for _ in range(60):
            dec = ((c4 * t + c3) * t + c2) * t * t + c1 * t
            if dec <= config.armijo_c * t * c1:
                break
            t *= config.armijo_shrink
        else:
            break
        u = u + t * full_d
        new_energy = gl_energy(mesh, u, eps).total
        if new_energy > energy + 1e-12 * max(1.0, abs(energy)):
            raise NonMonotone(f"energy increased from {energy!r} to {new_energy!r} at iteration {it}")
        energy = new_energy
        history.append(energy)
        Ku, g_new = grad(u)
        z_new = apply_p(g_new)
        gz_new = float(np.real(np.vdot(g_new, z_new)))
        beta = max(0.0, float(np.real(np.vdot(g_new, z_new - z))) / gz_old) if gz_old > 0 else 0.0
        if it % config.restart_every == 0:
            beta = 0.0
        d = -z_new + beta * d
        g, z, gz_old = g_new, z_new, gz_new
        gnorm = float(np.linalg.norm(g))
    else:
        converged = gnorm <= config.grad_tol * (1.0 + abs(energy))
    if not converged:
        logger.warning("GL minimization stopped after %d iterations (|g|=%.3g)", it, gnorm)
    out = P1Field(u, mask.copy())
    return GLSolution(mesh, out, eps, gl_energy(mesh, u, eps), it, converged, gnorm, history)


# ---------------------------------------------------------------------------
# bad disks


@dataclass
class Cluster:
    center: complex
    radius: float
    min_modulus: float
    n_vertices: int

    def to_json(self) -> dict:
        return {"center": [self.center.real, self.center.imag], "radius": self.radius,
                "min_modulus": self.min_modulus, "n_vertices": self.n_vertices}


@dataclass
class BadDiskReport:
    clusters: list
    boundary_clearance: float  # min over clusters of dist(center, boundary) / eps
    eps: float
    eta0: float

    @property
    def count(self) -> int:
        return len(self.clusters)

    def to_json(self) -> dict:
        clearance = self.boundary_clearance if math.isfinite(self.boundary_clearance) else None
        return {"clusters": [c.to_json() for c in self.clusters], "count": self.count,
                "boundary_clearance": clearance, "eps": self.eps, "eta0": self.eta0}


def bad_disks(solution: GLSolution, eta0: float = 1.0, threshold: float = 0.5) -> BadDiskReport:
    """Greedy disjoint disks of radius ``eta0 eps`` over ``{|u| <= 1/2}``, inflated 5x.

    Centers are centroids of the sublevel vertices assigned to each disk, weighted
    by ``(1 - 2|u|)_+`` times the vertex mass.
    """
    mesh, eps = solution.mesh, solution.eps
    u = solution.values
    mod = np.abs(u)
    bad = np.flatnonzero(mod <= threshold)
    if bad.size == 0:
        return BadDiskReport([], math.inf, eps, eta0)
    order = bad[np.lexsort((bad, mod[bad]))]
    x = mesh.vertices
    seeds: list[int] = []
    for i in order:
        if all(abs(x[i] - x[j]) > 2 * eta0 * eps for j in seeds):
            seeds.append(int(i))
    seed_pts = x[seeds]
    owner = np.argmin(np.abs(x[bad][:, None] - seed_pts[None, :]), axis=1)
    clusters = []
    for k, s in enumerate(seeds):
        members = bad[owner == k]
        wts = np.maximum(1.0 - 2.0 * mod[members], 0.0) * mesh.lumped_mass[members]
        center = complex(np.sum(wts * x[members]) / np.sum(wts)) if np.sum(wts) > 0 else complex(x[s])
        clusters.append(Cluster(center, 5 * eta0 * eps, float(mod[members].min()), int(members.size)))
    dist = mesh.distance_to_boundary(np.array([c.center for c in clusters]))
    return BadDiskReport(clusters, float(dist.min() / eps), eps, eta0)


def boundary_clearance_check(report: BadDiskReport, eps: float, eta0: float = 1.0) -> tuple[bool, float]:
    """Fails iff some cluster center lies within ``eta0 eps`` of the boundary."""
    if report.count == 0:
        return True, math.inf
    margin = report.boundary_clearance * report.eps / eps
    return margin > eta0, margin


def energy_quantum(solution: GLSolution, center: complex, r: float) -> float:
    """``(1/4 eps^2) int_{D_r(center)} (1 - |u|^2)^2`` by vertex quadrature."""
    mesh = solution.mesh
    inside = np.abs(mesh.vertices - center) < r
    pot = mesh.lumped_mass * (1.0 - np.abs(solution.values) ** 2) ** 2
    return float(np.sum(pot[inside])) / (4 * solution.eps ** 2)


def max_modulus_check(solution: GLSolution) -> float:
    return float(np.max(np.abs(solution.values)))


def el_residual(solution: GLSolution) -> float:
    """Euclidean norm of the interior gradient, relative to ``1 + |E|``."""
    mesh = solution.mesh
    g = gl_gradient_values(mesh, solution.values, solution.eps)[~solution.field.dirichlet_mask]
    return float(np.linalg.norm(g)) / (1.0 + abs(solution.energy.total))


@dataclass
class EnergyGap:
    gaps: list
    spread: float
    bounded: bool
    potential_ratio: float


def log_energy_gap(solutions: list, band: float = 2.0) -> EnergyGap:
    """``E_eps - pi |ln eps|`` per stage; bounded means ``max - min <= band``."""
    if len({s.eps for s in solutions}) < 2:
        raise ValueError("need solutions at >= 2 distinct eps")
    gaps = [s.energy.total - math.pi * abs(math.log(s.eps)) for s in solutions]
    spread = max(gaps) - min(gaps)
    pots = [s.energy.potential_part for s in solutions]
    ratio = max(pots) / min(pots) if min(pots) > 0 else math.inf
    return EnergyGap(gaps, spread, spread <= band, ratio)


# ---------------------------------------------------------------------------
# continuation


@dataclass
class ContinuationResult:
    solutions: list
    reports: list
    vortex_path: list  # per stage: list of cluster centers

    def to_json(self) -> dict:
        return {
            "stages": [
                {"eps": s.eps, "energy": s.energy._asdict(), "iterations": s.iterations,
                 "converged": s.converged, "el_residual": el_residual(s),
                 "max_modulus": max_modulus_check(s), "bad_disks": r.to_json()}
                for s, r in zip(self.solutions, self.reports)
            ],
            "vortex_path": [[[c.real, c.imag] for c in stage] for stage in self.vortex_path],
        }


def continuation(mesh: TriMesh, data: curves.BoundaryData, config: GLConfig | None = None,
                 seed=None) -> ContinuationResult:
    """Solve along the eps schedule, warm-starting every stage from the previous one.

    ``seed`` is an optional ``(u_map, a)`` pair (canonical harmonic map and its
    singularity) used for the first stage when ``config.init == "canonical"``.
    """
    config = config or GLConfig()
    solutions, reports, path = [], [], []
    prev = None
    for k, eps in enumerate(config.eps_schedule):
        if prev is not None:
            init = prev.field.copy()
        elif config.init == "canonical" and seed is not None:
            init = canonical_init(mesh, data, seed[0], seed[1], eps)
        else:
            init = harmonic_init(mesh, data)
        sol = minimize(mesh, data, eps, config, init)
        rep = bad_disks(sol, config.eta0)
        solutions.append(sol)
        reports.append(rep)
        path.append([c.center for c in rep.clusters])
        logger.info("eps=%.4g E=%.6f iters=%d clusters=%d", eps, sol.energy.total, sol.iterations, rep.count)
        prev = sol
    return ContinuationResult(solutions, reports, path)
