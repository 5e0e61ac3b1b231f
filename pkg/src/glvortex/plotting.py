"""SVG figures for experiment reports (matplotlib, non-interactive backend)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# fixed ids and no timestamp, so repeated runs write identical files
plt.rcParams["svg.hashsalt"] = "glvortex"
plt.rcParams["font.size"] = 9
plt.rcParams["axes.titlesize"] = 10
plt.rcParams["figure.dpi"] = 100

_META = {"Date": None, "Creator": None}


def _finish(fig, ax, path, boundary=None):
    if boundary is not None:
        b = np.concatenate([boundary, boundary[:1]])
        ax.plot(b.real, b.imag, color="k", lw=0.8)
    ax.set_aspect("equal")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    fig.tight_layout()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata=_META)
    plt.close(fig)
    return path


def modulus_heatmap(mesh, values, path, title: str = "|u|"):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    tpc = ax.tripcolor(mesh.triangulation, np.abs(values), shading="gouraud", cmap="viridis",
                       vmin=0.0, vmax=1.0, rasterized=True)
    fig.colorbar(tpc, ax=ax, shrink=0.85)
    ax.set_title(title)
    return _finish(fig, ax, path, mesh.boundary_polyline)


def quiver(mesh, values, path, n_arrows: int = 900, title: str = "u"):
    x = mesh.vertices
    lo, hi = x.real.min() + 1j * x.imag.min(), x.real.max() + 1j * x.imag.max()
    n = int(np.sqrt(n_arrows))
    gx, gy = np.meshgrid(np.linspace(lo.real, hi.real, n), np.linspace(lo.imag, hi.imag, n))
    pts = (gx + 1j * gy).ravel()
    tri, _ = mesh.locate(pts)
    pts = pts[tri >= 0]
    u = mesh.interpolate(values, pts)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    ax.quiver(pts.real, pts.imag, u.real, u.imag, np.abs(u), cmap="viridis", clim=(0, 1),
              angles="xy", scale_units="xy", scale=n / (hi.real - lo.real) * 1.2, width=0.004)
    ax.set_title(title)
    return _finish(fig, ax, path, mesh.boundary_polyline)


def vortex_path(boundary, path_by_eps, eps_values, path, target=None):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for eps, centers in zip(eps_values, path_by_eps):
        c = np.asarray(centers, dtype=complex)
        if c.size:
            ax.plot(c.real, c.imag, "o", ms=4, label=f"eps={eps:g}")
    if target is not None:
        ax.plot([target.real], [target.imag], "k+", ms=10, label="argmax")
    ax.legend(loc="best", fontsize=7)
    ax.set_title("vortex centers")
    return _finish(fig, ax, path, boundary)


def flow_streamlines(flow, boundary, path, every: int = 4):
    fig, ax = plt.subplots(figsize=(4.5, 4))
    psi = flow.psi
    for k in range(0, psi.shape[1], every):
        ax.plot(psi[:, k].real, psi[:, k].imag, color="tab:blue", lw=0.6)
    closed = np.concatenate([psi, psi[:, :1]], axis=1)
    for j in range(0, psi.shape[0], every):
        ax.plot(closed[j].real, closed[j].imag, color="tab:red", lw=0.6)
    ax.set_title(f"s-flow (blue), theta-flow (red); rho={flow.rho:.6f}")
    return _finish(fig, ax, path, boundary)


def renormalized_energy_map(base, boundary, path, w0_value: float, n_r: int = 40, n_t: int = 96,
                            argmax=None):
    """Heatmap of ``W(a)`` over ``a = base(omega)`` on a polar grid of the disk."""
    from .renorm import renormalized_energy_at

    r = np.linspace(0.0, 0.92, n_r)
    t = np.linspace(0.0, 2 * np.pi, n_t)
    om = r[:, None] * np.exp(1j * t)[None, :]
    W = renormalized_energy_at(base, om, w0_value)
    a = base(om)
    fig, ax = plt.subplots(figsize=(4.5, 4))
    pc = ax.pcolormesh(a.real, a.imag, W, shading="gouraud", cmap="magma", rasterized=True)
    fig.colorbar(pc, ax=ax, shrink=0.85, label="W(a)")
    if argmax is not None:
        ax.plot([argmax.real], [argmax.imag], "c*", ms=9)
    ax.set_title("renormalized energy")
    return _finish(fig, ax, path, boundary)
