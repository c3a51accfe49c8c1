"""Gauss-Lobatto spectral bases and the reduction/reconstruction operators.

One-dimensional nodal (Lagrange) and edge polynomials are combined by tensor
products into bases for 0-, 1- and 2-forms on the reference square.  The
edge polynomial of index i is minus the sum of the derivatives of the nodal
polynomials below it, which makes its integral over the p-th grid segment
equal to the Kronecker delta; nodal polynomials carry the usual Kronecker
property at the nodes.  Together these give a reduction (integration over
cells), a reconstruction (interpolation from cochains) and a projection
(their composition) that commute with differentiation.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .topology import Cochain, TensorCellComplex

__all__ = [
    "NumericalFailureError",
    "GLLRule",
    "SpectralBasis1D",
    "gll_rule",
    "gll_basis",
    "gauss_rule",
    "lagrange_eval",
    "edge_eval",
    "DiscreteForm",
    "reduce_form",
    "reconstruct",
    "project",
]

DEFAULT_QUAD_MARGIN = 3


class NumericalFailureError(RuntimeError):
    """An iterative numerical procedure failed to converge."""


def _legendre_pair(n: int, x: np.ndarray):
    """Values of the Legendre polynomials of degree n and n-1 at x."""
    p_prev = np.ones_like(x)
    p = x.copy()
    if n == 0:
        return p_prev, np.zeros_like(x)
    for k in range(1, n):
        p_prev, p = p, ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
    return p, p_prev


@dataclass(frozen=True)
class GLLRule:
    """Gauss-Lobatto-Legendre nodes and quadrature weights on [-1, 1]."""

    order: int
    nodes: np.ndarray
    weights: np.ndarray


def gll_rule(order: int) -> GLLRule:
    """Gauss-Lobatto-Legendre rule of the given order (order+1 nodes).

    Nodes are the roots of (1 - x^2) P'_N(x), computed by Newton iteration
    from Chebyshev-Lobatto initial guesses; weights are 2 / (N (N+1) P_N^2).
    The rule integrates polynomials of degree <= 2N - 1 exactly.
    """
    if not (1 <= order <= 64):
        raise ValueError(f"order must be between 1 and 64, got {order}")
    n = order
    x = np.cos(np.pi * np.arange(n + 1) / n)[::-1].copy()
    for _ in range(100):
        p, p_prev = _legendre_pair(n, x)
        dx = (x * p - p_prev) / ((n + 1) * p)
        x -= dx
        if np.max(np.abs(dx)) < 5e-16:
            break
    else:
        raise NumericalFailureError(f"GLL Newton iteration did not converge for order {n}")
    x[0], x[-1] = -1.0, 1.0
    p, p_prev = _legendre_pair(n, x)
    # Defect of (1 - x^2) P'_N via the identity (1 - x^2) P'_N = N (P_{N-1} - x P_N).
    if np.max(np.abs(n * (p_prev - x * p))) > 1e-12:
        raise NumericalFailureError(f"GLL nodes for order {n} failed the residual check")
    w = 2.0 / (n * (n + 1) * p**2)
    x.flags.writeable = False
    w.flags.writeable = False
    return GLLRule(n, x, w)


def gauss_rule(order: int):
    """Gauss-Legendre nodes and weights with the given number of points."""
    return np.polynomial.legendre.leggauss(order)


@dataclass(frozen=True)
class SpectralBasis1D:
    """Nodal and edge polynomial evaluators over an arbitrary 1D node set.

    Evaluation uses the barycentric form for numerical stability; edge
    polynomials are assembled from the analytic derivatives of the nodal
    ones.  The node set need not include the interval endpoints, which lets
    the same machinery serve both the primal Gauss-Lobatto grid and the
    interior dual grid.
    """

    nodes: np.ndarray
    bary_weights: np.ndarray
    rule: GLLRule | None = None

    @classmethod
    def from_nodes(cls, nodes, rule: GLLRule | None = None) -> "SpectralBasis1D":
        nodes = np.asarray(nodes, dtype=float).copy()
        if nodes.ndim != 1 or nodes.size < 1:
            raise ValueError("nodes must be a non-empty 1-d vector")
        if nodes.size > 1 and np.any(np.diff(nodes) <= 0.0):
            raise ValueError("nodes must be strictly increasing")
        diff = nodes[:, None] - nodes[None, :]
        np.fill_diagonal(diff, 1.0)
        bw = 1.0 / np.prod(diff, axis=1)
        nodes.flags.writeable = False
        bw.flags.writeable = False
        return cls(nodes, bw, rule)

    @property
    def order(self) -> int:
        """Polynomial degree of the nodal basis."""
        return self.nodes.size - 1

    @property
    def num_nodes(self) -> int:
        return self.nodes.size

    def lagrange_all(self, x) -> np.ndarray:
        """Values h_i(x) for all i, shape (num_nodes, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[None, :] - self.nodes[:, None]
        on_node = np.abs(diff) < 1e-14
        safe = np.where(on_node, 1.0, diff)
        terms = self.bary_weights[:, None] / safe
        vals = terms / np.sum(terms, axis=0, keepdims=True)
        hit = np.any(on_node, axis=0)
        if np.any(hit):
            vals[:, hit] = on_node[:, hit].astype(float)
        return vals

    def lagrange_deriv_all(self, x) -> np.ndarray:
        """Values h_i'(x) for all i, shape (num_nodes, len(x))."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        diff = x[None, :] - self.nodes[:, None]
        on_node = np.abs(diff) < 1e-14
        hit = np.any(on_node, axis=0)
        out = np.empty((self.num_nodes, x.size))
        off = ~hit
        if np.any(off):
            d = diff[:, off]
            h = self.lagrange_all(x[off])
            s = np.sum(1.0 / d, axis=0, keepdims=True)
            out[:, off] = h * (s - 1.0 / d)
        if np.any(hit):
            # Differentiation-matrix entries at the node the point sits on.
            for col in np.nonzero(hit)[0]:
                p = int(np.nonzero(on_node[:, col])[0][0])
                dcol = self.nodes[p] - self.nodes
                dcol[p] = 1.0
                vals = (self.bary_weights / self.bary_weights[p]) / dcol
                vals[p] = 0.0
                vals[p] = -np.sum(vals)
                out[:, col] = vals
        return out

    def edge_all(self, x) -> np.ndarray:
        """Values of the edge polynomials e_i(x), i = 1..order, shape (order, len(x))."""
        dh = self.lagrange_deriv_all(x)
        return -np.cumsum(dh[:-1, :], axis=0)

    def lagrange(self, i: int, x):
        if not (0 <= i <= self.order):
            raise ValueError(f"nodal index must be in 0..{self.order}, got {i}")
        return self.lagrange_all(x)[i]

    def edge(self, i: int, x):
        if not (1 <= i <= self.order):
            raise ValueError(f"edge index must be in 1..{self.order}, got {i}")
        return self.edge_all(x)[i - 1]


def gll_basis(order: int) -> SpectralBasis1D:
    """Spectral basis over the Gauss-Lobatto nodes of the given order."""
    rule = gll_rule(order)
    return SpectralBasis1D.from_nodes(rule.nodes, rule)


def lagrange_eval(basis: SpectralBasis1D, i: int, xi) -> float | np.ndarray:
    """Value of the i-th nodal interpolation polynomial at xi."""
    out = basis.lagrange(i, xi)
    return float(out[0]) if np.isscalar(xi) else out


def edge_eval(basis: SpectralBasis1D, i: int, xi) -> float | np.ndarray:
    """Value of the i-th edge polynomial (the dxi proxy coefficient) at xi."""
    out = basis.edge(i, xi)
    return float(out[0]) if np.isscalar(xi) else out


@dataclass(frozen=True)
class DiscreteForm:
    """Reconstructed k-form: coefficient grids over a tensor-product basis.

    Coefficient blocks are indexed [xi, eta].  A 0-form holds one
    (N+1, N+1) block, a 1-form holds the dxi block (N, N+1) and the deta
    block (N+1, N), and a 2-form a single (N, N) block (its dxi^deta
    coefficient).
    """

    degree: int
    blocks: tuple
    basis: SpectralBasis1D

    def evaluate(self, xi, eta):
        """Evaluate on the tensor grid xi x eta.

        Returns an (n_xi, n_eta) array per component: the value for 0-forms,
        the (dxi, deta) component pair for 1-forms, and the dxi^deta
        coefficient for 2-forms.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        b = self.basis
        if self.degree == 0:
            return b.lagrange_all(xi).T @ self.blocks[0] @ b.lagrange_all(eta)
        if self.degree == 1:
            a = b.edge_all(xi).T @ self.blocks[0] @ b.lagrange_all(eta)
            c = b.lagrange_all(xi).T @ self.blocks[1] @ b.edge_all(eta)
            return a, c
        return b.edge_all(xi).T @ self.blocks[0] @ b.edge_all(eta)

    def evaluate_at(self, xi, eta):
        """Evaluate at scattered points (xi[m], eta[m])."""
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        b = self.basis
        if self.degree == 0:
            return np.einsum("im,ij,jm->m", b.lagrange_all(xi), self.blocks[0], b.lagrange_all(eta))
        if self.degree == 1:
            a = np.einsum("im,ij,jm->m", b.edge_all(xi), self.blocks[0], b.lagrange_all(eta))
            c = np.einsum("im,ij,jm->m", b.lagrange_all(xi), self.blocks[1], b.edge_all(eta))
            return a, c
        return np.einsum("im,ij,jm->m", b.edge_all(xi), self.blocks[0], b.edge_all(eta))

    def derivative_at(self, xi, eta):
        """Exterior derivative of the form, evaluated at scattered points.

        For a 0-form returns the (dxi, deta) component pair of its
        differential; for a 1-form the dxi^deta coefficient of its curl.
        """
        xi = np.atleast_1d(np.asarray(xi, dtype=float))
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        b = self.basis
        if self.degree == 0:
            a = np.einsum("im,ij,jm->m", b.lagrange_deriv_all(xi), self.blocks[0], b.lagrange_all(eta))
            c = np.einsum("im,ij,jm->m", b.lagrange_all(xi), self.blocks[0], b.lagrange_deriv_all(eta))
            return a, c
        if self.degree == 1:
            d_b = np.einsum("im,ij,jm->m", b.lagrange_deriv_all(xi), self.blocks[1], b.edge_all(eta))
            d_a = np.einsum("im,ij,jm->m", b.edge_all(xi), self.blocks[0], b.lagrange_deriv_all(eta))
            return d_b - d_a
        raise ValueError("a 2-form has no exterior derivative in two dimensions")

    def to_cochain(self) -> Cochain:
        """Coefficient vector in the flat cell ordering of the grid complex."""
        if self.degree == 0:
            return Cochain(0, self.blocks[0].T.ravel())
        if self.degree == 1:
            return Cochain(1, np.concatenate([self.blocks[0].T.ravel(), self.blocks[1].T.ravel()]))
        return Cochain(2, self.blocks[0].T.ravel())


def _cell_quad(nodes: np.ndarray, q_nodes: np.ndarray, q_weights: np.ndarray):
    """Map a reference quadrature rule into every interval of a node vector.

    Returns points of shape (n_cells, nq) and matching weights.
    """
    lo = nodes[:-1, None]
    hi = nodes[1:, None]
    pts = 0.5 * (hi - lo) * q_nodes[None, :] + 0.5 * (hi + lo)
    wts = 0.5 * (hi - lo) * q_weights[None, :]
    return pts, wts


def _eval_grid(f, x, y):
    """Evaluate f on broadcast arrays, tolerating constant-valued callables."""
    x, y = np.broadcast_arrays(x, y)
    return np.broadcast_to(np.asarray(f(x, y), dtype=float), x.shape)


def reduce_form(degree: int, components, complex: TensorCellComplex, quad_order: int) -> Cochain:
    """Integrate a smooth k-form over every k-cell of the complex.

    ``components`` is a callable (xi, eta) -> value for degrees 0 and 2, and
    a pair of callables for the two components of a 1-form.  Integrals use a
    Gauss-Legendre rule of ``quad_order`` points per direction, so they are
    exact up to round-off for polynomial integrands within the rule's reach.
    """
    if degree == 0:
        f = components if callable(components) else components[0]
        xi, eta = np.meshgrid(complex.nodes_xi, complex.nodes_eta, indexing="ij")
        vals = _eval_grid(f, xi, eta)
        return Cochain(0, vals.T.ravel())
    if quad_order < 2:
        raise ValueError("quad_order must be at least 2")
    qx, qw = gauss_rule(quad_order)
    if degree == 1:
        try:
            f_xi, f_eta = components
        except TypeError as exc:
            raise ValueError("a 1-form needs its (dxi, deta) component pair") from exc
        pts, wts = _cell_quad(complex.nodes_xi, qx, qw)
        # xi-directed edges: integrate the dxi component along eta = const.
        vals = _eval_grid(f_xi, pts[:, None, :], complex.nodes_eta[None, :, None])
        c_xi = np.einsum("ijm,im->ij", vals, wts)  # [i-1, j]
        pts, wts = _cell_quad(complex.nodes_eta, qx, qw)
        vals = _eval_grid(f_eta, complex.nodes_xi[:, None, None], pts[None, :, :])
        c_eta = np.einsum("ijm,jm->ij", vals, wts)  # [i, j-1]
        return Cochain(1, np.concatenate([c_xi.T.ravel(), c_eta.T.ravel()]))
    if degree == 2:
        f = components if callable(components) else components[0]
        px, wx = _cell_quad(complex.nodes_xi, qx, qw)
        py, wy = _cell_quad(complex.nodes_eta, qx, qw)
        vals = _eval_grid(f, px[:, None, :, None], py[None, :, None, :])
        c = np.einsum("ijmn,im,jn->ij", vals, wx, wy)
        return Cochain(2, c.T.ravel())
    raise ValueError(f"form degree must be 0, 1 or 2, got {degree}")


def _blocks_from_cochain(c: Cochain, basis: SpectralBasis1D):
    n = basis.order
    if c.degree == 0:
        if c.coefficients.size != (n + 1) ** 2:
            raise ValueError("0-cochain size does not match the basis order")
        return (c.coefficients.reshape(n + 1, n + 1).T,)
    if c.degree == 1:
        if c.coefficients.size != 2 * n * (n + 1):
            raise ValueError("1-cochain size does not match the basis order")
        c_xi = c.coefficients[: n * (n + 1)].reshape(n + 1, n).T
        c_eta = c.coefficients[n * (n + 1):].reshape(n, n + 1).T
        return (c_xi, c_eta)
    if c.degree == 2:
        if c.coefficients.size != n * n:
            raise ValueError("2-cochain size does not match the basis order")
        return (c.coefficients.reshape(n, n).T,)
    raise ValueError(f"form degree must be 0, 1 or 2, got {c.degree}")


def reconstruct(c: Cochain, basis: SpectralBasis1D) -> DiscreteForm:
    """Interpolate a cochain back to a smooth k-form.

    Reduction of the result returns the cochain exactly, and reconstruction
    commutes with differentiation: the derivative of the interpolant equals
    the interpolant of the coboundary.
    """
    return DiscreteForm(c.degree, _blocks_from_cochain(c, basis), basis)


def project(
    degree: int,
    components,
    complex: TensorCellComplex,
    basis: SpectralBasis1D,
    quad_order: int | None = None,
) -> DiscreteForm:
    """Reduce a smooth form over the grid cells and reconstruct it.

    The composition is idempotent and commutes with the exterior derivative.
    """
    if complex.n_xi != basis.order or complex.n_eta != basis.order:
        raise ValueError("complex resolution does not match the basis order")
    if not np.allclose(complex.nodes_xi, basis.nodes) or not np.allclose(
        complex.nodes_eta, basis.nodes
    ):
        raise ValueError("complex nodes do not match the basis nodes")
    if quad_order is None:
        quad_order = basis.order + DEFAULT_QUAD_MARGIN
    return reconstruct(reduce_form(degree, components, complex, quad_order), basis)
