"""End-to-end experiment: mesh, GL continuation, renormalized energy, frame flow, reports."""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import conformal, curves, frame_flow, gl_solver, mesh_fem, plotting, renorm

logger = logging.getLogger(__name__)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else None
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(obj), sort_keys=True, indent=1) + "\n")
    return path


def gl_config(cfg: cfgmod.ExperimentConfig) -> gl_solver.GLConfig:
    s = cfg.solver
    return gl_solver.GLConfig(
        eps_schedule=tuple(cfg.eps_schedule),
        max_iters=int(s.get("max_iters", 5000)),
        grad_tol=float(s.get("grad_tol", 1e-8)),
        init=s.get("init", "harmonic"),
        eta0=float(s.get("eta0", 1.0)),
        j0=int(s.get("j0", 4)),
        gap_band=float(s.get("gap_band", 2.0)),
    )


class Experiment:
    """Stage-by-stage pipeline state; each stage writes its own artifacts."""

    def __init__(self, cfg: cfgmod.ExperimentConfig, out_dir):
        self.cfg = cfg
        self.out = Path(out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.curve, self.base = cfgmod.build_domain(cfg.domain)
        self.data = cfgmod.build_data(cfg.data, self.curve)
        # tangent fields of polygons jump at corners, where the quadrature is undefined;
        # a counterclockwise Jordan curve has tangent degree 1
        if self.data.kind == "tangential":
            self.degree = 1
        else:
            self.degree = curves.degree(self.data)
        self.artifacts: list[str] = []
        self.summary: dict = {"degree": self.degree}
        self.mesh = None
        self.continuation = None
        self.optimum = None

    def _record(self, path: Path):
        self.artifacts.append(str(path.relative_to(self.out)))

    # -- stages -------------------------------------------------------------
    def build_mesh(self):
        self.mesh = mesh_fem.mesh_curve(self.curve, self.cfg.h)
        self._record(write_json(self.out / "mesh.json", self.mesh.to_json()))
        self.summary["mesh"] = {"n_vertices": self.mesh.n_vertices, "n_triangles": len(self.mesh.triangles),
                                "min_angle": self.mesh.min_angle, "area": self.mesh.area}
        return self.mesh

    def find_optimum(self):
        if self.base is not None and self.degree == 1 and self.optimum is None:
            self.optimum = renorm.optimal_vortex(self.base)
        return self.optimum

    def solve_gl(self):
        if self.mesh is None:
            self.build_mesh()
        glc = gl_config(self.cfg)
        seed = None
        if glc.init == "canonical" and self.find_optimum() is not None and self.cfg.data["kind"] == "tangential":
            spec = renorm.canonical_spec(self.base, self.data, omega=self.optimum.omega)
            seed = (renorm.canonical_harmonic_map(spec), self.optimum.a)
        res = gl_solver.continuation(self.mesh, self.data, glc, seed)
        self.continuation = res
        stages = []
        for k, (sol, rep) in enumerate(zip(res.solutions, res.reports)):
            self._record(write_json(self.out / "fields" / f"eps_{k}.json",
                                    {"eps": sol.eps, **sol.field.to_json()}))
            passed, margin = gl_solver.boundary_clearance_check(rep, sol.eps, glc.eta0)
            quanta = [gl_solver.energy_quantum(sol, c.center, glc.eta0 * sol.eps) for c in rep.clusters]
            stages.append({
                "eps": sol.eps, "energy": sol.energy._asdict(), "iterations": sol.iterations,
                "converged": sol.converged, "el_residual": gl_solver.el_residual(sol),
                "max_modulus": gl_solver.max_modulus_check(sol), "bad_disks": rep.to_json(),
                "clearance_pass": passed, "clearance_margin": margin, "energy_quanta": quanta,
                "within_j0": rep.count <= glc.j0,
            })
            self._record(plotting.modulus_heatmap(self.mesh, sol.values, self.out / "plots" / f"modulus_eps_{k}.svg",
                                                  f"|u|, eps={sol.eps:g}"))
            self._record(plotting.quiver(self.mesh, sol.values, self.out / "plots" / f"quiver_eps_{k}.svg",
                                         title=f"u, eps={sol.eps:g}"))
        result = {"stages": stages, "vortex_path": res.vortex_path}
        if self.degree != 0 and len(res.solutions) >= 2:
            gap = gl_solver.log_energy_gap(res.solutions, glc.gap_band)
            result["log_energy_gap"] = {"gaps": gap.gaps, "spread": gap.spread, "bounded": gap.bounded,
                                        "potential_ratio": gap.potential_ratio}
        self._record(write_json(self.out / "gl_results.json", result))
        target = self.find_optimum().a if self.find_optimum() is not None else None
        self._record(plotting.vortex_path(self.mesh.boundary_polyline, res.vortex_path, self.cfg.eps_schedule,
                                          self.out / "plots" / "vortex_path.svg", target))
        final = res.reports[-1]
        self.summary["gl"] = {"final_clusters": [c.center for c in final.clusters],
                              "final_energy": res.solutions[-1].energy.total}
        return res

    def renormalized_energy(self):
        if self.base is None or self.degree != 1 or not self.cfg.renorm.get("enabled", True):
            return None
        opt = self.find_optimum()
        deltas = tuple(self.cfg.renorm.get("delta_list", (0.08, 0.04, 0.02, 0.01)))
        mass = None
        if self.mesh is not None:
            try:
                mass = mesh_fem.green_dirichlet_fem(self.mesh, opt.a).mass
            except Exception as exc:  # report-only: the spectral mass is still available
                logger.warning("FEM Green mass unavailable: %s", exc)
        report = renorm.renorm_report(self.base, self.data, delta_list=deltas, green_mass_fem=mass)
        obj = report.to_json()
        obj["green_mass_spectral"] = -math.log(abs(conformal.rebase(self.base, opt.omega).derivative_at_0))
        self._record(write_json(self.out / "renorm_report.json", obj))
        self._record(plotting.renormalized_energy_map(self.base, self.curve.samples(512),
                                                      self.out / "plots" / "renormalized_energy.svg",
                                                      report.W0, argmax=opt.a))
        self.summary["renorm"] = {"W_formula": report.W_formula, "route_discrepancy": report.route_discrepancy,
                                  "argmax": opt.a}
        return report

    def frame_flow(self):
        fcfg = self.cfg.flow
        if not fcfg.get("enabled", True) or self.degree != 1:
            return None
        source = fcfg.get("source", "conformal" if self.base is not None else "gl")
        if source == "conformal":
            if self.base is None:
                return None
            frame = frame_flow.frame_from_conformal(conformal.rebase(self.base, self.find_optimum().omega))
            cr_tol = float(fcfg.get("cr_tol", 1e-3))
        else:
            if self.continuation is None:
                self.solve_gl()
            rep = self.continuation.reports[-1]
            if rep.count != 1:
                logger.warning("GL frame flow needs exactly one vortex, found %d", rep.count)
                return None
            frame = frame_flow.frame_from_gl(self.continuation.solutions[-1], rep.clusters[0].center)
            cr_tol = float(fcfg.get("cr_tol", 1e-2))
        flow = frame_flow.integrate_flow(frame, float(fcfg.get("s_min", -1.5)), int(fcfg.get("n_s", 48)),
                                         int(fcfg.get("n_theta", 96)), seed=self.cfg.seed)
        obj = flow.to_json()
        obj["source"] = source
        try:
            fmap, info = frame_flow.reconstruct_map(flow, cr_tol=cr_tol)
            obj["reconstructed"] = fmap.to_json()
            obj["reconstruction"] = info
        except Exception as exc:
            obj["reconstruction_error"] = f"{type(exc).__name__}: {exc}"
        self._record(write_json(self.out / "flow_result.json", obj))
        self._record(plotting.flow_streamlines(flow, frame.boundary, self.out / "plots" / "flow_streamlines.svg"))
        self.summary["flow"] = {"rho": flow.rho, "closure_error": flow.closure_error,
                                "commutator_error": flow.commutator_error, "source": source}
        return flow

    def write_manifest(self):
        manifest = {
            "name": self.cfg.name,
            "config": self.cfg.raw,
            "artifacts": sorted(self.artifacts),
            "summary": self.summary,
        }
        return write_json(self.out / "manifest.json", manifest)


def run(cfg: cfgmod.ExperimentConfig, out_dir) -> Path:
    exp = Experiment(cfg, out_dir)
    exp.build_mesh()
    exp.solve_gl()
    exp.renormalized_energy()
    exp.frame_flow()
    return exp.write_manifest()
