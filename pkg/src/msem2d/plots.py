"""Figure rendering for the report path: convergence curves and field plots.

Figures are written next to the delimited output with matching stems; the
Agg backend keeps rendering headless.
"""

from __future__ import annotations

import os

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "h_convergence_figure",
    "p_convergence_figure",
    "solution_figure",
    "difference_figure",
]

_COLORS = plt.rcParams["axes.prop_cycle"].by_key()["color"]
_STYLES = {"dual": "-o", "single": "--s", "projection": ":k"}


def _sibling_path(csv_path: str, suffix: str) -> str:
    stem, _ = os.path.splitext(csv_path)
    return f"{stem}{suffix}.png"


def h_convergence_figure(records, slopes, csv_path: str) -> list:
    """One log-log error-vs-h figure per deformation value, beside the CSV."""
    paths = []
    c_values = sorted({rec.c for rec in records})
    orders = sorted({rec.N for rec in records})
    methods = sorted({rec.method for rec in records})
    for c in c_values:
        fig, axes = plt.subplots(1, 2, figsize=(9.6, 4.2), sharey=True)
        for which, ax in zip(("l2_omega", "l2_q"), axes):
            for n_i, order in enumerate(orders):
                for method in methods:
                    pts = sorted(
                        (1.0 / rec.Mx, getattr(rec, which))
                        for rec in records
                        if rec.c == c and rec.N == order and rec.method == method
                    )
                    if not pts:
                        continue
                    h, err = zip(*pts)
                    slope = slopes.get((method, order, c))
                    label = f"{method} N={order}"
                    if slope is not None:
                        label += f" (slope {slope[0 if which == 'l2_omega' else 1]:.2f})"
                    ax.loglog(h, err, _STYLES.get(method, "-"), color=_COLORS[n_i % len(_COLORS)],
                              label=label, markersize=4)
            ax.set_xlabel("h = 1 / elements per side")
            ax.grid(True, which="both", alpha=0.3)
            ax.set_title("volume form" if which == "l2_omega" else "flux")
        axes[0].set_ylabel(r"$L^2$ error")
        axes[0].legend(fontsize=7)
        fig.suptitle(f"h-convergence, c = {c}")
        path = _sibling_path(csv_path, f"_h_c{c}")
        fig.savefig(path, dpi=160, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def p_convergence_figure(records, references, csv_path: str) -> list:
    """Semi-log error-vs-order figures, one per (mesh, c), beside the CSV."""
    paths = []
    meshes = sorted({rec.Mx for rec in records})
    c_values = sorted({rec.c for rec in records})
    for c in c_values:
        fig, axes = plt.subplots(1, len(meshes), figsize=(4.8 * len(meshes), 4.2), sharey=True)
        axes = np.atleast_1d(axes)
        for ax, m in zip(axes, meshes):
            for method in sorted({rec.method for rec in records}):
                pts = sorted(
                    (rec.N, rec.l2_omega)
                    for rec in records
                    if rec.c == c and rec.Mx == m and rec.method == method
                )
                if pts:
                    n, err = zip(*pts)
                    ax.semilogy(n, err, _STYLES.get(method, "-"), label=method, markersize=4)
            ref = sorted((r.N, r.l2_omega) for r in references if r.c == c and r.Mx == m)
            if ref:
                n, err = zip(*ref)
                ax.semilogy(n, err, _STYLES["projection"], label="projection of exact")
            ax.set_xlabel("order N")
            ax.set_title(f"{m}x{m} elements")
            ax.grid(True, which="both", alpha=0.3)
        axes[0].set_ylabel(r"$L^2$ error of the volume form")
        axes[0].legend(fontsize=8)
        fig.suptitle(f"p-convergence, c = {c}")
        path = _sibling_path(csv_path, f"_p_c{c}")
        fig.savefig(path, dpi=160, bbox_inches="tight")
        plt.close(fig)
        paths.append(path)
    return paths


def solution_figure(sol, csv_path: str, samples: int = 81) -> str:
    """Reconstructed scalar field of one solution, beside the CSV."""
    from .basis import reconstruct
    from .geometry import metric_at
    from .topology import Cochain

    mesh = sol.mesh
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    ref = np.linspace(-1.0, 1.0, max(8, samples // max(mesh.mx, mesh.my)))
    xi, eta = np.meshgrid(ref, ref, indexing="ij")
    for e in range(mesh.num_elements):
        det = metric_at(mesh.maps[e], xi.ravel(), eta.ravel()).det
        form = reconstruct(Cochain(2, sol.local_omega(e)), mesh.basis)
        vals = form.evaluate_at(xi.ravel(), eta.ravel()) / det
        x, y = mesh.maps[e](xi.ravel(), eta.ravel())
        pc = ax.pcolormesh(
            x.reshape(xi.shape),
            y.reshape(xi.shape),
            vals.reshape(xi.shape),
            shading="gouraud",
            cmap="coolwarm",
            vmin=-1.05,
            vmax=1.05,
        )
    fig.colorbar(pc, ax=ax)
    ax.set_aspect("equal")
    ax.set_title(f"{sol.problem.method} solution, N={mesh.order}, {mesh.mx}x{mesh.my}, c={mesh.c}")
    path = _sibling_path(csv_path, "_field")
    fig.savefig(path, dpi=160, bbox_inches="tight")
    plt.close(fig)
    return path


def difference_figure(xg, yg, field, csv_path: str) -> str:
    """Contour plot of the pointwise gap between the two methods."""
    fig, ax = plt.subplots(figsize=(5.2, 4.4))
    pc = ax.pcolormesh(xg, yg, field, shading="gouraud", cmap="viridis")
    fig.colorbar(pc, ax=ax)
    ax.set_aspect("equal")
    ax.set_title("|dual - single| of the reconstructed solution")
    path = _sibling_path(csv_path, "_diff")
    fig.savefig(path, dpi=160, bbox_inches="tight")
    plt.close(fig)
    return path
