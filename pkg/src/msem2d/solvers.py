"""Poisson solvers for volume forms: staggered dual-grid and mixed single-grid.

Both methods solve the same second-order equation for a 2-form unknown: the
flux 1-form is the rotated gradient of the scalar carried by the 2-form, and
its discrete divergence (an incidence matrix) must match the reduced source
exactly.  The dual-grid method applies the star operator explicitly through
Hodge matrices between the primal grid and a staggered dual grid; the
single-grid method encodes it implicitly through mass matrices in a mixed
saddle-point system.  Dirichlet data (the trace of the star of the unknown)
enters the first through ghost values on the dual grid and the second
through a boundary integral on the right-hand side.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import dual_edge_coboundary, hodge_02, hodge_11_dual_to_primal, mass_matrix
from .basis import DEFAULT_QUAD_MARGIN, SpectralBasis1D, reduce_form
from .geometry import BIUNIT, MAX_DEFORMATION, Rect, pullback
from .mesh import Mesh2D, build_mesh
from .topology import Cochain, incidence_matrix

__all__ = [
    "SolverFailureError",
    "PoissonProblem",
    "Solution",
    "solve",
    "solve_dual",
    "solve_single",
    "conservation_residual",
    "source_cochain",
]


class SolverFailureError(RuntimeError):
    """The assembled linear system could not be solved reliably."""


@dataclass(frozen=True)
class PoissonProblem:
    """Specification of one volume-form Poisson solve.

    ``source`` is the coefficient of the source 2-form in physical
    coordinates; ``boundary_data`` is the prescribed trace of the star of
    the unknown on the domain boundary.
    """

    method: str
    order: int
    mx: int
    my: int
    c: float
    source: callable
    boundary_data: callable
    domain: Rect = BIUNIT
    quad_order: int | None = None

    def __post_init__(self):
        if self.method not in ("dual", "single"):
            raise ValueError(f"method must be 'dual' or 'single', got {self.method!r}")
        if self.order < 1:
            raise ValueError("order must be at least 1")
        if self.mx < 1 or self.my < 1:
            raise ValueError("element counts must be at least 1")
        if abs(self.c) >= MAX_DEFORMATION:
            raise ValueError("deformation coefficient must satisfy |c| < 1/pi")

    @property
    def effective_quad_order(self) -> int:
        return self.quad_order if self.quad_order is not None else self.order + DEFAULT_QUAD_MARGIN


@dataclass
class Solution:
    """Solved cochains on the global mesh plus solver diagnostics.

    ``omega`` is ordered by global surface index, ``q`` by global edge
    index.  ``num_unknowns`` counts the unknowns of the solved linear
    system (the two methods share omega but carry different auxiliary
    unknowns).
    """

    problem: PoissonProblem
    mesh: Mesh2D
    omega: np.ndarray
    q: np.ndarray
    num_unknowns: int
    diagnostics: dict = field(default_factory=dict)

    def local_omega(self, e: int) -> np.ndarray:
        return self.omega[self.mesh.surface_l2g[e]]

    def local_q(self, e: int) -> np.ndarray:
        return self.q[self.mesh.edge_l2g[e]]


def source_cochain(problem: PoissonProblem, mesh: Mesh2D) -> Cochain:
    """Reduction of the source 2-form onto the global surfaces."""
    f = np.empty(mesh.global_complex.num_surfaces)
    for e in range(mesh.num_elements):
        ref = pullback(2, problem.source, mesh.maps[e])
        local = reduce_form(2, ref, mesh.local_complex, problem.effective_quad_order)
        f[mesh.surface_l2g[e]] = local.coefficients
    return Cochain(2, f)


def _sparse_solve(a: sp.spmatrix, b: np.ndarray, what: str) -> np.ndarray:
    a = a.tocsc()
    try:
        x = spla.spsolve(a, b)
    except RuntimeError as exc:
        raise SolverFailureError(f"{what} system factorization failed: {exc}") from exc
    if not np.all(np.isfinite(x)):
        raise SolverFailureError(f"{what} system is singular (non-finite solution)")
    return x


def _diagnostics(a: sp.spmatrix, x: np.ndarray, b: np.ndarray) -> dict:
    residual = float(np.max(np.abs(a @ x - b))) if b.size else 0.0
    try:
        lu = spla.splu(a.tocsc())
        op = spla.LinearOperator(
            a.shape,
            matvec=lu.solve,
            rmatvec=lambda v: lu.solve(v, trans="T"),
        )
        cond = float(spla.onenormest(a) * spla.onenormest(op))
    except Exception:
        cond = float("nan")
    return {"residual": residual, "condition_estimate": cond}


def _boundary_values(problem: PoissonProblem, x, y, shape) -> np.ndarray:
    return np.broadcast_to(np.asarray(problem.boundary_data(x, y), dtype=float), x.shape).reshape(shape)


def solve(problem: PoissonProblem) -> Solution:
    if problem.method == "dual":
        return solve_dual(problem)
    return solve_single(problem)


def solve_dual(problem: PoissonProblem) -> Solution:
    """Staggered solve: explicit Hodge matrices between primal and dual grids.

    Unknowns are the primal 2-cochain plus one shared value per dual point
    on each element interface.  Per primal surface the divergence of the
    primal flux must equal the reduced source; per interface edge the flux
    computed from the two neighbouring elements must coincide.  Domain
    boundary ghost values carry the Dirichlet data.
    """
    t0 = time.perf_counter()
    mesh = build_mesh(problem.order, problem.mx, problem.my, problem.c, problem.domain)
    n = problem.order
    mx, my = problem.mx, problem.my
    gc = mesh.global_complex
    n_surf = gc.num_surfaces
    n_edges = gc.num_edges
    n_local_edges = 2 * n * (n + 1)
    n_int = n * n

    # Interface unknown numbering: vertical interfaces then horizontal ones.
    n_vert = (mx - 1) * my * n
    n_horz = (my - 1) * mx * n

    def vert_id(vx: int, ey: int, t: int) -> int:
        return ((vx - 1) * my + ey) * n + (t - 1)

    def horz_id(hy: int, ex: int, s: int) -> int:
        return n_vert + ((hy - 1) * mx + ex) * n + (s - 1)

    n_iface = n_vert + n_horz
    n_unknowns = n_surf + n_iface

    dual_edge_basis = SpectralBasis1D.from_nodes(
        np.concatenate(([-1.0], mesh.dual_nodes, [1.0]))
    )
    dual_node_basis = SpectralBasis1D.from_nodes(mesh.dual_nodes)
    dcb = dual_edge_coboundary(n)
    quad = problem.effective_quad_order

    # Owner mask over local edges: interface edges are owned by the element
    # that sees them on its east or north side.
    owner_mask = {}
    for ey in range(my):
        for ex in range(mx):
            mask = np.ones(n_local_edges, dtype=bool)
            if ey > 0:
                mask[mesh.local_complex.xi_edge_index(np.arange(1, n + 1), 0)] = False
            if ex > 0:
                mask[mesh.local_complex.eta_edge_index(0, np.arange(1, n + 1))] = False
            owner_mask[(ex, ey)] = mask

    rows_q, cols_q, vals_q = [], [], []
    rows_q2, cols_q2, vals_q2 = [], [], []
    q_aff = np.zeros(n_edges)
    q2_aff = np.zeros(n_edges)
    dual_count = np.zeros(n_edges, dtype=np.int64)

    for ey in range(my):
        for ex in range(mx):
            e = mesh.element_index(ex, ey)
            cmap = mesh.maps[e]
            h11 = hodge_11_dual_to_primal(
                dual_edge_basis, dual_node_basis, mesh.basis, cmap, quad
            ).matrix
            h02 = hodge_02(mesh.basis, mesh.dual_nodes, cmap).matrix
            full = h11 @ dcb
            l_int = full[:, :n_int] @ h02
            l_gh = full[:, n_int:]

            # Ghost slots: unknown interface columns or Dirichlet values.
            ghost_cols = np.full(4 * n, -1, dtype=np.int64)
            ghost_vals = np.zeros(4 * n)
            sides = [
                ("west", ex == 0, lambda t: vert_id(ex, ey, t), -1.0, None),
                ("east", ex == mx - 1, lambda t: vert_id(ex + 1, ey, t), +1.0, None),
                ("south", ey == 0, lambda s: horz_id(ey, ex, s), None, -1.0),
                ("north", ey == my - 1, lambda s: horz_id(ey + 1, ex, s), None, +1.0),
            ]
            for k, (_, on_boundary, iface, xi_fix, eta_fix) in enumerate(sides):
                sl = slice(k * n, (k + 1) * n)
                if on_boundary:
                    if xi_fix is not None:
                        x, y = cmap(np.full(n, xi_fix), mesh.dual_nodes)
                    else:
                        x, y = cmap(mesh.dual_nodes, np.full(n, eta_fix))
                    ghost_vals[sl] = problem.boundary_data(x, y)
                else:
                    ghost_cols[sl] = n_surf + np.array([iface(t) for t in range(1, n + 1)])

            g_edges = mesh.edge_l2g[e]
            g_surf = mesh.surface_l2g[e]
            mask = owner_mask[(ex, ey)]
            unknown_slots = np.nonzero(ghost_cols >= 0)[0]
            data_slots = np.nonzero(ghost_cols < 0)[0]

            for which, rows, cols, vals, aff in (
                (mask, rows_q, cols_q, vals_q, q_aff),
                (~mask, rows_q2, cols_q2, vals_q2, q2_aff),
            ):
                idx = np.nonzero(which)[0]
                if idx.size == 0:
                    continue
                ge = g_edges[idx]
                rows.append(np.repeat(ge, n_int))
                cols.append(np.tile(g_surf, idx.size))
                vals.append(l_int[idx].ravel())
                if unknown_slots.size:
                    rows.append(np.repeat(ge, unknown_slots.size))
                    cols.append(np.tile(ghost_cols[unknown_slots], idx.size))
                    vals.append(l_gh[np.ix_(idx, unknown_slots)].ravel())
                if data_slots.size:
                    aff[ge] += l_gh[np.ix_(idx, data_slots)] @ ghost_vals[data_slots]
            dual_count[g_edges[~mask]] += 1

    q_of_x = sp.coo_matrix(
        (np.concatenate(vals_q), (np.concatenate(rows_q), np.concatenate(cols_q))),
        shape=(n_edges, n_unknowns),
    ).tocsr()
    iface_edges = np.nonzero(dual_count)[0]
    if iface_edges.size != n_iface:
        raise SolverFailureError("interface bookkeeping is inconsistent")
    if n_iface:
        q2_of_x = sp.coo_matrix(
            (np.concatenate(vals_q2), (np.concatenate(rows_q2), np.concatenate(cols_q2))),
            shape=(n_edges, n_unknowns),
        ).tocsr()
    else:
        q2_of_x = sp.csr_matrix((n_edges, n_unknowns))

    e21 = incidence_matrix(gc, 2).matrix.astype(float)
    f_h = source_cochain(problem, mesh)
    a_top = e21 @ q_of_x
    b_top = f_h.coefficients - e21 @ q_aff
    if n_iface:
        a_bot = (q2_of_x - q_of_x)[iface_edges]
        b_bot = (q_aff - q2_aff)[iface_edges]
        a = sp.vstack([a_top, a_bot])
        b = np.concatenate([b_top, b_bot])
    else:
        a, b = a_top, b_top

    x = _sparse_solve(a, b, "dual-grid")
    omega = x[:n_surf]
    q = q_of_x @ x + q_aff
    diag = _diagnostics(a.tocsc(), x, b)
    diag["runtime_s"] = time.perf_counter() - t0
    return Solution(problem, mesh, omega, q, n_unknowns, diag)


def solve_single(problem: PoissonProblem) -> Solution:
    """Mixed solve on a single grid: mass matrices carry the star implicitly.

    Flux unknowns sit on the shared global edges (normal continuity across
    interfaces); the 2-form unknowns are per surface and carry no
    inter-element continuity.  The saddle system pairs the flux mass matrix
    with the weighted divergence; the Dirichlet boundary integral lands on
    the right-hand side.
    """
    t0 = time.perf_counter()
    mesh = build_mesh(problem.order, problem.mx, problem.my, problem.c, problem.domain)
    n = problem.order
    mx, my = problem.mx, problem.my
    gc = mesh.global_complex
    n_surf = gc.num_surfaces
    n_edges = gc.num_edges
    quad = problem.effective_quad_order

    rows1, cols1, vals1 = [], [], []
    rows2, cols2, vals2 = [], [], []
    bv = np.zeros(n_edges)
    qx, qw = mesh.quad(quad)
    nodes = mesh.basis.nodes
    lo, hi = nodes[:-1], nodes[1:]
    pts = 0.5 * (hi - lo)[:, None] * qx[None, :] + 0.5 * (hi + lo)[:, None]
    wts = 0.5 * (hi - lo)[:, None] * qw[None, :]
    edge_vals = mesh.basis.edge_all(pts.ravel()).reshape(n, n, -1)  # [i-1, cell, m]

    for ey in range(my):
        for ex in range(mx):
            e = mesh.element_index(ex, ey)
            cmap = mesh.maps[e]
            m1 = mass_matrix(1, mesh.basis, cmap, quad).matrix
            m2 = mass_matrix(2, mesh.basis, cmap, quad).matrix
            ge = mesh.edge_l2g[e]
            gs = mesh.surface_l2g[e]
            rows1.append(np.repeat(ge, ge.size))
            cols1.append(np.tile(ge, ge.size))
            vals1.append(m1.ravel())
            rows2.append(np.repeat(gs, gs.size))
            cols2.append(np.tile(gs, gs.size))
            vals2.append(m2.ravel())

            # Boundary integral of (trace of basis form) wedge (given data),
            # taken counter-clockwise around the domain.
            lc = mesh.local_complex
            if ey == 0:
                x, y = cmap(pts.ravel(), -1.0)
                moments = np.einsum("icm,cm,cm->i", edge_vals, _boundary_values(problem, x, y, (n, -1)), wts)
                bv[ge[lc.xi_edge_index(np.arange(1, n + 1), 0)]] += moments
            if ey == my - 1:
                x, y = cmap(pts.ravel(), 1.0)
                moments = np.einsum("icm,cm,cm->i", edge_vals, _boundary_values(problem, x, y, (n, -1)), wts)
                bv[ge[lc.xi_edge_index(np.arange(1, n + 1), n)]] -= moments
            if ex == 0:
                x, y = cmap(-1.0, pts.ravel())
                moments = np.einsum("icm,cm,cm->i", edge_vals, _boundary_values(problem, x, y, (n, -1)), wts)
                bv[ge[lc.eta_edge_index(0, np.arange(1, n + 1))]] -= moments
            if ex == mx - 1:
                x, y = cmap(1.0, pts.ravel())
                moments = np.einsum("icm,cm,cm->i", edge_vals, _boundary_values(problem, x, y, (n, -1)), wts)
                bv[ge[lc.eta_edge_index(n, np.arange(1, n + 1))]] += moments

    m1_g = sp.coo_matrix(
        (np.concatenate(vals1), (np.concatenate(rows1), np.concatenate(cols1))),
        shape=(n_edges, n_edges),
    ).tocsr()
    m2_g = sp.coo_matrix(
        (np.concatenate(vals2), (np.concatenate(rows2), np.concatenate(cols2))),
        shape=(n_surf, n_surf),
    ).tocsr()
    e21 = incidence_matrix(gc, 2).matrix.astype(float)
    b_div = m2_g @ e21
    a = sp.bmat([[m1_g, b_div.T], [b_div, None]], format="csc")
    f_h = source_cochain(problem, mesh)
    rhs = np.concatenate([bv, m2_g @ f_h.coefficients])

    x = _sparse_solve(a, rhs, "single-grid")
    q = x[:n_edges]
    omega = x[n_edges:]
    diag = _diagnostics(a, x, rhs)
    diag["runtime_s"] = time.perf_counter() - t0
    return Solution(problem, mesh, omega, q, n_edges + n_surf, diag)


def conservation_residual(sol: Solution, f_h: Cochain) -> float:
    """Largest per-surface defect of (divergence of flux) minus source."""
    if f_h.degree != 2:
        raise ValueError("the source cochain must have degree 2")
    e21 = incidence_matrix(sol.mesh.global_complex, 2).matrix
    defect = e21 @ sol.q - f_h.coefficients
    return float(np.max(np.abs(defect))) if defect.size else 0.0
