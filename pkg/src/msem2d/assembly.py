"""Metric-dependent matrices: mass matrices and explicit Hodge matrices.

Mass matrices realize the L2 inner product of the tensor-product form bases
on a curvilinear element; the two Hodge matrices realize the star operator
explicitly for the staggered formulation.  All degree-of-freedom orderings
follow the flat cell orderings of :mod:`msem2d.topology`, so assembled
matrices compose directly with incidence matrices.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import DEFAULT_QUAD_MARGIN, SpectralBasis1D, gauss_rule
from .geometry import CurvilinearMap, MetricData, metric_at

__all__ = [
    "MassMatrix",
    "HodgeMatrix",
    "form_component_arrays",
    "mass_matrix",
    "hodge_02",
    "hodge_11_dual_to_primal",
    "dual_edge_coboundary",
]


@dataclass(frozen=True)
class MassMatrix:
    """L2 inner-product matrix of the degree-k form basis on one element."""

    degree: int
    matrix: np.ndarray


@dataclass(frozen=True)
class HodgeMatrix:
    """Discrete star operator between complementary-degree cochain spaces."""

    source_degree: int
    target_degree: int
    matrix: np.ndarray


def form_component_arrays(basis: SpectralBasis1D, xi_pts, eta_pts, degree: int):
    """Basis component values on a tensor point grid, in flat dof order.

    Points are flattened in C order with the xi index slow.  For degree 1
    two arrays are returned: the dxi components and the deta components of
    every edge dof (each is zero on the other family's block).
    """
    n = basis.order
    h_x = basis.lagrange_all(xi_pts)
    h_y = basis.lagrange_all(eta_pts)
    e_x = basis.edge_all(xi_pts)
    e_y = basis.edge_all(eta_pts)
    nq = h_x.shape[1] * h_y.shape[1]
    if degree == 0:
        t = h_x[:, None, :, None] * h_y[None, :, None, :]  # [i, j, qx, qy]
        return t.transpose(1, 0, 2, 3).reshape((n + 1) ** 2, nq)
    if degree == 1:
        ta = e_x[:, None, :, None] * h_y[None, :, None, :]  # [i-1, j, qx, qy]
        tb = h_x[:, None, :, None] * e_y[None, :, None, :]  # [i, j-1, qx, qy]
        n_xi = n * (n + 1)
        psi_a = np.zeros((2 * n_xi, nq))
        psi_b = np.zeros((2 * n_xi, nq))
        psi_a[:n_xi] = ta.transpose(1, 0, 2, 3).reshape(n_xi, nq)
        psi_b[n_xi:] = tb.transpose(1, 0, 2, 3).reshape(n_xi, nq)
        return psi_a, psi_b
    if degree == 2:
        t = e_x[:, None, :, None] * e_y[None, :, None, :]
        return t.transpose(1, 0, 2, 3).reshape(n * n, nq)
    raise ValueError(f"form degree must be 0, 1 or 2, got {degree}")


def _quad_grid(quad_order: int):
    qx, qw = gauss_rule(quad_order)
    w2 = (qw[:, None] * qw[None, :]).ravel()
    return qx, w2


def mass_matrix(
    degree: int,
    basis: SpectralBasis1D,
    cmap: CurvilinearMap,
    quad_order: int | None = None,
) -> MassMatrix:
    """Mass matrix of the degree-k basis with the element's metric terms.

    Entry (a, b) integrates the pointwise inner product of basis forms a and
    b against the volume form: 0-forms carry the Jacobian determinant,
    1-forms the contravariant metric contraction of their two components
    times the determinant, and 2-forms the inverse determinant.
    """
    if degree not in (0, 1, 2):
        raise ValueError(f"form degree must be 0, 1 or 2, got {degree}")
    if quad_order is None:
        quad_order = basis.order + DEFAULT_QUAD_MARGIN
    qx, w2 = _quad_grid(quad_order)
    xi, eta = np.meshgrid(qx, qx, indexing="ij")
    g = metric_at(cmap, xi.ravel(), eta.ravel())
    if degree == 0:
        psi = form_component_arrays(basis, qx, qx, 0)
        m = (psi * (w2 * g.det)) @ psi.T
    elif degree == 1:
        psi_a, psi_b = form_component_arrays(basis, qx, qx, 1)
        wdet = w2 * g.det
        m = (psi_a * (wdet * g.g11)) @ psi_a.T
        m += (psi_a * (wdet * g.g12)) @ psi_b.T
        m += (psi_b * (wdet * g.g12)) @ psi_a.T
        m += (psi_b * (wdet * g.g22)) @ psi_b.T
    else:
        psi = form_component_arrays(basis, qx, qx, 2)
        m = (psi * (w2 / g.det)) @ psi.T
    return MassMatrix(degree, m)


def hodge_02(
    basis: SpectralBasis1D,
    dual_nodes: np.ndarray,
    cmap: CurvilinearMap,
) -> HodgeMatrix:
    """Star of a primal 2-cochain, sampled as a 0-cochain on the dual nodes.

    Row (a, b) evaluates the reconstructed 2-form coefficient at dual node
    (a, b) and divides by the Jacobian determinant there, which is the value
    of the star of the 2-form at the node's physical image.  On an
    undeformed element the sampled function is a polynomial of degree N-1
    per direction, so N dual nodes per direction represent it exactly.
    """
    n = basis.order
    dual_nodes = np.asarray(dual_nodes, dtype=float)
    if dual_nodes.shape != (n,):
        raise ValueError(f"expected {n} dual nodes per direction, got {dual_nodes.shape}")
    e_x = basis.edge_all(dual_nodes)  # (n, n)
    xi, eta = np.meshgrid(dual_nodes, dual_nodes, indexing="ij")
    det = metric_at(cmap, xi.ravel(), eta.ravel()).det.reshape(n, n)
    # Rows: dual point (a, b) flat b*n + a; columns: surface (i, j) flat as usual.
    h = np.einsum("ia,jb->baji", e_x, e_x).reshape(n * n, n * n)
    h /= det.T.ravel()[:, None]
    return HodgeMatrix(2, 0, h)


def dual_edge_coboundary(n: int) -> np.ndarray:
    """Difference operator from extended dual 0-values to dual 1-values.

    Input layout: the N*N interior dual values (eta-major) followed by the
    west, east, south and north ghost blocks of N values each.  Output
    layout: xi-directed dual edge values (interval s = 1..N+1 fast, row
    t = 1..N slow), then eta-directed ones (column s fast, interval t slow).
    Every output is the difference of the head and tail values of the dual
    edge, taken toward increasing coordinate.
    """
    n_int = n * n
    n_ext = n_int + 4 * n
    west = n_int
    east = n_int + n
    south = n_int + 2 * n
    north = n_int + 3 * n

    def interior(s, t):
        return (t - 1) * n + (s - 1)

    d = np.zeros((2 * n * (n + 1), n_ext))
    row = 0
    for t in range(1, n + 1):
        for s in range(1, n + 2):
            head = east + (t - 1) if s == n + 1 else interior(s, t)
            tail = west + (t - 1) if s == 1 else interior(s - 1, t)
            d[row, head] += 1.0
            d[row, tail] -= 1.0
            row += 1
    for t in range(1, n + 2):
        for s in range(1, n + 1):
            head = north + (s - 1) if t == n + 1 else interior(s, t)
            tail = south + (s - 1) if t == 1 else interior(s, t - 1)
            d[row, head] += 1.0
            d[row, tail] -= 1.0
            row += 1
    return d


def hodge_11_dual_to_primal(
    dual_edge_basis: SpectralBasis1D,
    dual_node_basis: SpectralBasis1D,
    primal_basis: SpectralBasis1D,
    cmap: CurvilinearMap,
    quad_order: int | None = None,
) -> HodgeMatrix:
    """Star of the dual-grid 1-form, reduced onto the primal edges.

    The dual 1-form is reconstructed with edge polynomials over the extended
    dual nodes (``dual_edge_basis``, endpoints included) tensored with nodal
    polynomials over the interior dual nodes (``dual_node_basis``).  The
    star rotates its components a quarter turn and contracts them with the
    contravariant metric times the Jacobian determinant; each matrix entry
    integrates the result over one primal edge by Gauss quadrature.

    Column order matches :func:`dual_edge_coboundary`; row order matches the
    primal edge ordering of the element complex.
    """
    n = primal_basis.order
    if dual_edge_basis.order != n + 1 or dual_node_basis.order != n - 1:
        raise ValueError("dual basis orders do not match the primal order")
    if quad_order is None:
        quad_order = n + DEFAULT_QUAD_MARGIN
    qx, qw = gauss_rule(quad_order)
    nodes = primal_basis.nodes
    n_xi = n * (n + 1)
    n_col_xi = (n + 1) * n
    h = np.zeros((2 * n_xi, 2 * n_xi))

    # Quadrature points of every xi-directed primal edge (cell i, row eta_j).
    lo, hi = nodes[:-1], nodes[1:]
    pts = 0.5 * (hi - lo)[:, None] * qx[None, :] + 0.5 * (hi + lo)[:, None]  # (n, nq)
    wts = 0.5 * (hi - lo)[:, None] * qw[None, :]
    g = metric_at(
        cmap,
        np.broadcast_to(pts[:, None, :], (n, n + 1, pts.shape[1])).ravel(),
        np.broadcast_to(nodes[None, :, None], (n, n + 1, pts.shape[1])).ravel(),
    )
    shape = (n, n + 1, pts.shape[1])
    det = g.det.reshape(shape)
    g12 = g.g12.reshape(shape)
    g22 = g.g22.reshape(shape)
    # Star of (A dxi + B deta) has dxi component -det (A g12 + B g22).
    ed = dual_edge_basis.edge_all(pts.ravel()).reshape(n + 1, n, -1)  # [s-1, i-1, m]
    hn_eta = dual_node_basis.lagrange_all(nodes)  # [t-1, j]
    rows = -np.einsum("ijm,sim,tj,im->jits", det * g12, ed, hn_eta, wts)
    h[:n_xi, :n_col_xi] = rows.reshape(n_xi, n_col_xi)
    hn = dual_node_basis.lagrange_all(pts.ravel()).reshape(n, n, -1)  # [s-1, i-1, m]
    ed_eta = dual_edge_basis.edge_all(nodes)  # [t-1, j]
    rows = -np.einsum("ijm,sim,tj,im->jits", det * g22, hn, ed_eta, wts)
    h[:n_xi, n_col_xi:] = rows.reshape(n_xi, n_xi)

    # Quadrature points of every eta-directed primal edge (column xi_i).
    g = metric_at(
        cmap,
        np.broadcast_to(nodes[:, None, None], (n + 1, n, pts.shape[1])).ravel(),
        np.broadcast_to(pts[None, :, :], (n + 1, n, pts.shape[1])).ravel(),
    )
    shape = (n + 1, n, pts.shape[1])
    det = g.det.reshape(shape)
    g11 = g.g11.reshape(shape)
    g12 = g.g12.reshape(shape)
    # Star of (A dxi + B deta) has deta component det (A g11 + B g12).
    ed = dual_edge_basis.edge_all(nodes)  # [s-1, i]
    hn_eta = dual_node_basis.lagrange_all(pts.ravel()).reshape(n, n, -1)  # [t-1, j-1, m]
    rows = np.einsum("ijm,si,tjm,jm->jits", det * g11, ed, hn_eta, wts)
    h[n_xi:, :n_col_xi] = rows.reshape(n_xi, n_col_xi)
    hn = dual_node_basis.lagrange_all(nodes)  # [s-1, i]
    ed_eta = dual_edge_basis.edge_all(pts.ravel()).reshape(n + 1, n, -1)  # [t-1, j-1, m]
    rows = np.einsum("ijm,si,tjm,jm->jits", det * g12, hn, ed_eta, wts)
    h[n_xi:, n_col_xi:] = rows.reshape(n_xi, n_xi)
    return HodgeMatrix(1, 1, h)
