"""Oriented tensor-product cell complexes, incidence matrices and dual grids.

Grid topology is kept strictly separate from geometry: incidence matrices are
integer valued and depend only on connectivity and orientation, never on node
coordinates.  The orientation convention is fixed once and for all:

* points are sinks (an edge entering a point counts +1 at that point),
* edges point toward increasing coordinate,
* surfaces are oriented counter-clockwise.

Cell ordering is lexicographic with the eta index major and the xi index
minor (xi varies fastest), with all xi-directed edges numbered before the
eta-directed ones.  This makes every incidence matrix reproducible
bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

__all__ = [
    "TensorCellComplex",
    "IncidenceMatrix",
    "Chain",
    "Cochain",
    "DualGrid",
    "build_primal_complex",
    "incidence_matrix",
    "coboundary",
    "build_dual_grid",
]


def _validated_nodes(nodes, name: str) -> np.ndarray:
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.size < 2:
        raise ValueError(f"{name} must be a 1-d vector with at least two entries")
    if np.any(np.diff(nodes) <= 0.0):
        raise ValueError(f"{name} must be strictly increasing")
    if abs(nodes[0] + 1.0) > 1e-12 or abs(nodes[-1] - 1.0) > 1e-12:
        raise ValueError(f"{name} must have endpoints -1 and +1")
    nodes = nodes.copy()
    nodes.flags.writeable = False
    return nodes


@dataclass(frozen=True)
class TensorCellComplex:
    """Oriented cell complex of a 2D tensor-product grid.

    The k-cells are the points, edges and cells of the grid spanned by
    ``nodes_xi`` x ``nodes_eta``.  Only connectivity and orientation matter;
    the node coordinates are retained so that metric modules can integrate
    over the cells, but no operation in this module reads them beyond
    validation.
    """

    nodes_xi: np.ndarray
    nodes_eta: np.ndarray

    @property
    def n_xi(self) -> int:
        """Number of cells in the xi direction."""
        return self.nodes_xi.size - 1

    @property
    def n_eta(self) -> int:
        return self.nodes_eta.size - 1

    @property
    def num_points(self) -> int:
        return (self.n_xi + 1) * (self.n_eta + 1)

    @property
    def num_xi_edges(self) -> int:
        return self.n_xi * (self.n_eta + 1)

    @property
    def num_eta_edges(self) -> int:
        return (self.n_xi + 1) * self.n_eta

    @property
    def num_edges(self) -> int:
        return self.num_xi_edges + self.num_eta_edges

    @property
    def num_surfaces(self) -> int:
        return self.n_xi * self.n_eta

    def num_cells(self, k: int) -> int:
        if k == 0:
            return self.num_points
        if k == 1:
            return self.num_edges
        if k == 2:
            return self.num_surfaces
        raise ValueError(f"cell degree must be 0, 1 or 2, got {k}")

    @property
    def euler_number(self) -> int:
        return self.num_points - self.num_edges + self.num_surfaces

    # Flat indices for the documented lexicographic ordering.  All index
    # helpers accept scalars or integer arrays.

    def point_index(self, i, j):
        """Point (i, j) with i in 0..n_xi, j in 0..n_eta."""
        return np.asarray(j) * (self.n_xi + 1) + np.asarray(i)

    def xi_edge_index(self, i, j):
        """xi-directed edge [xi_{i-1}, xi_i] x {eta_j}, i in 1..n_xi."""
        return np.asarray(j) * self.n_xi + (np.asarray(i) - 1)

    def eta_edge_index(self, i, j):
        """eta-directed edge {xi_i} x [eta_{j-1}, eta_j], j in 1..n_eta."""
        return self.num_xi_edges + (np.asarray(j) - 1) * (self.n_xi + 1) + np.asarray(i)

    def surface_index(self, i, j):
        """Surface [xi_{i-1}, xi_i] x [eta_{j-1}, eta_j], i, j 1-based."""
        return (np.asarray(j) - 1) * self.n_xi + (np.asarray(i) - 1)


@dataclass(frozen=True)
class IncidenceMatrix:
    """Integer matrix of oriented face relations between k- and (k-1)-cells."""

    degree: int
    matrix: sp.csr_matrix

    @property
    def shape(self):
        return self.matrix.shape

    def toarray(self) -> np.ndarray:
        return self.matrix.toarray()


@dataclass(frozen=True)
class Chain:
    """Weighted formal sum of k-cells, stored as its coefficient vector."""

    degree: int
    coefficients: np.ndarray


@dataclass(frozen=True)
class Cochain:
    """Linear functional on k-chains, stored as its coefficient vector.

    Pairing with a chain of the same degree is the plain dot product of the
    two coefficient vectors; this is the discrete counterpart of integrating
    a k-form over a k-dimensional region.
    """

    degree: int
    coefficients: np.ndarray

    def pair(self, chain: Chain) -> float:
        if chain.degree != self.degree:
            raise ValueError("chain and cochain degrees differ")
        return float(np.dot(self.coefficients, chain.coefficients))


def build_primal_complex(nodes_xi, nodes_eta) -> TensorCellComplex:
    """Build the oriented cell complex of the tensor grid nodes_xi x nodes_eta.

    Node vectors must be strictly increasing with endpoints -1 and +1.
    """
    return TensorCellComplex(
        _validated_nodes(nodes_xi, "nodes_xi"),
        _validated_nodes(nodes_eta, "nodes_eta"),
    )


def incidence_matrix(complex: TensorCellComplex, k: int) -> IncidenceMatrix:
    """Matrix of the boundary operator taking k-cells to their oriented faces.

    Row i lists the faces of k-cell i with entries +1/-1 according to whether
    the face carries its default orientation in the boundary of the cell.
    """
    nx, ny = complex.n_xi, complex.n_eta
    if k == 1:
        rows, cols, vals = [], [], []
        # xi-directed edges run from point (i-1, j) to point (i, j).
        i, j = np.meshgrid(np.arange(1, nx + 1), np.arange(0, ny + 1), indexing="ij")
        r = complex.xi_edge_index(i, j).ravel()
        rows += [r, r]
        cols += [complex.point_index(i - 1, j).ravel(), complex.point_index(i, j).ravel()]
        vals += [np.full(r.size, -1), np.full(r.size, +1)]
        # eta-directed edges run from point (i, j-1) to point (i, j).
        i, j = np.meshgrid(np.arange(0, nx + 1), np.arange(1, ny + 1), indexing="ij")
        r = complex.eta_edge_index(i, j).ravel()
        rows += [r, r]
        cols += [complex.point_index(i, j - 1).ravel(), complex.point_index(i, j).ravel()]
        vals += [np.full(r.size, -1), np.full(r.size, +1)]
        shape = (complex.num_edges, complex.num_points)
    elif k == 2:
        # Counter-clockwise boundary: +bottom, +right, -top, -left.
        i, j = np.meshgrid(np.arange(1, nx + 1), np.arange(1, ny + 1), indexing="ij")
        r = complex.surface_index(i, j).ravel()
        rows = [r, r, r, r]
        cols = [
            complex.xi_edge_index(i, j - 1).ravel(),
            complex.xi_edge_index(i, j).ravel(),
            complex.eta_edge_index(i - 1, j).ravel(),
            complex.eta_edge_index(i, j).ravel(),
        ]
        vals = [
            np.full(r.size, +1),
            np.full(r.size, -1),
            np.full(r.size, -1),
            np.full(r.size, +1),
        ]
        shape = (complex.num_surfaces, complex.num_edges)
    else:
        raise ValueError(f"incidence matrix defined for k in {{1, 2}}, got {k}")
    mat = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
        dtype=np.int64,
    ).tocsr()
    return IncidenceMatrix(k, mat)


def coboundary(c: Cochain, complex: TensorCellComplex) -> Cochain:
    """Formal adjoint of the boundary operator: the discrete derivative.

    The resulting (k+1)-cochain satisfies <coboundary(c), a> = <c, boundary a>
    for every (k+1)-chain a, exactly, in integer arithmetic when the inputs
    are integers.
    """
    k = c.degree
    if k >= 2:
        raise ValueError("cannot raise the degree of a top-dimensional cochain")
    if c.coefficients.shape != (complex.num_cells(k),):
        raise ValueError("cochain length does not match the complex")
    e = incidence_matrix(complex, k + 1).matrix
    return Cochain(k + 1, e @ c.coefficients)


@dataclass(frozen=True)
class DualGrid:
    """Staggered companion grid pairing primal k-cells with (2-k)-cells.

    The interior dual cells are in bijection with the primal cells: the dual
    of a primal surface is a point, the dual of a primal edge is the edge
    crossing it, and the dual of a primal point is the surrounding surface.
    Because the raw dual grid is not closed under the boundary operator, it
    is completed with ghost points and edges on the domain boundary; the
    completed structure is the tensor complex over the extended dual nodes
    (the interior dual nodes plus the endpoints -1 and +1).

    Dual cells are oriented by rotating their primal partner a quarter turn
    counter-clockwise: dual edges crossing xi-directed primal edges keep the
    +eta direction, dual edges crossing eta-directed primal edges point
    toward -xi, and dual surfaces are clockwise.  With this convention the
    interior block of each dual incidence matrix is exactly the transpose of
    the complementary primal one.
    """

    primal: TensorCellComplex
    complex: TensorCellComplex
    dual_nodes_xi: np.ndarray
    dual_nodes_eta: np.ndarray

    @property
    def extended_nodes_xi(self) -> np.ndarray:
        return self.complex.nodes_xi

    @property
    def extended_nodes_eta(self) -> np.ndarray:
        return self.complex.nodes_eta

    # Bijections between primal cells and interior dual cells, as flat index
    # arrays into the completed complex.

    @property
    def point_of_surface(self) -> np.ndarray:
        """Completed-complex point index of the dual of each primal surface."""
        nx, ny = self.primal.n_xi, self.primal.n_eta
        i, j = np.meshgrid(np.arange(1, nx + 1), np.arange(1, ny + 1), indexing="ij")
        out = np.empty(self.primal.num_surfaces, dtype=np.int64)
        out[self.primal.surface_index(i, j).ravel()] = self.complex.point_index(i, j).ravel()
        return out

    @property
    def edge_of_edge(self) -> np.ndarray:
        """Completed-complex edge index of the dual of each primal edge."""
        nx, ny = self.primal.n_xi, self.primal.n_eta
        out = np.empty(self.primal.num_edges, dtype=np.int64)
        # Dual of a primal xi-edge (i, j) is the eta-directed edge (i, j+1).
        i, j = np.meshgrid(np.arange(1, nx + 1), np.arange(0, ny + 1), indexing="ij")
        out[self.primal.xi_edge_index(i, j).ravel()] = self.complex.eta_edge_index(i, j + 1).ravel()
        # Dual of a primal eta-edge (i, j) is the xi-directed edge (i+1, j).
        i, j = np.meshgrid(np.arange(0, nx + 1), np.arange(1, ny + 1), indexing="ij")
        out[self.primal.eta_edge_index(i, j).ravel()] = self.complex.xi_edge_index(i + 1, j).ravel()
        return out

    @property
    def surface_of_point(self) -> np.ndarray:
        """Completed-complex surface index of the dual of each primal point."""
        nx, ny = self.primal.n_xi, self.primal.n_eta
        i, j = np.meshgrid(np.arange(0, nx + 1), np.arange(0, ny + 1), indexing="ij")
        out = np.empty(self.primal.num_points, dtype=np.int64)
        out[self.primal.point_index(i, j).ravel()] = self.complex.surface_index(i + 1, j + 1).ravel()
        return out

    @property
    def ghost_point_indices(self) -> dict:
        """Completed-complex indices of the boundary-completion points.

        Sides hold the N ghost points facing the interior dual rows or
        columns; the four corner points close the boundary loop.
        """
        nx, ny = self.primal.n_xi, self.primal.n_eta
        c = self.complex
        interior_xi = np.arange(1, nx + 1)
        interior_eta = np.arange(1, ny + 1)
        return {
            "west": np.asarray(c.point_index(0, interior_eta)),
            "east": np.asarray(c.point_index(nx + 1, interior_eta)),
            "south": np.asarray(c.point_index(interior_xi, 0)),
            "north": np.asarray(c.point_index(interior_xi, ny + 1)),
            "corners": np.asarray(
                c.point_index(np.array([0, nx + 1, 0, nx + 1]), np.array([0, 0, ny + 1, ny + 1]))
            ),
        }

    def incidence(self, k: int) -> IncidenceMatrix:
        """Incidence matrix of the completed dual complex, in dual orientation.

        The quarter-turn orientation rule amounts to flipping the sign of
        every xi-directed dual edge and of every dual surface relative to the
        default tensor-grid convention of :func:`incidence_matrix`.
        """
        raw = incidence_matrix(self.complex, k).matrix
        n_xi_edges = self.complex.num_xi_edges
        edge_signs = np.ones(self.complex.num_edges, dtype=np.int64)
        edge_signs[:n_xi_edges] = -1
        if k == 1:
            mat = sp.diags(edge_signs, dtype=np.int64) @ raw
        else:
            mat = -(raw @ sp.diags(edge_signs, dtype=np.int64))
        return IncidenceMatrix(k, mat.tocsr())


def build_dual_grid(primal: TensorCellComplex, dual_nodes_xi, dual_nodes_eta=None) -> DualGrid:
    """Construct the completed dual grid of a primal complex.

    ``dual_nodes_xi`` (and optionally ``dual_nodes_eta``) hold one strictly
    interior node per primal cell per direction; these become the interior
    dual points.  The completion appends the endpoints -1, +1 per direction.
    """
    if dual_nodes_eta is None:
        dual_nodes_eta = dual_nodes_xi

    def _check(nodes, count, name):
        nodes = np.asarray(nodes, dtype=float)
        if nodes.shape != (count,):
            raise ValueError(f"{name} must hold one node per primal cell ({count}), got {nodes.shape}")
        if np.any(np.diff(nodes) <= 0.0):
            raise ValueError(f"{name} must be strictly increasing")
        if nodes[0] <= -1.0 or nodes[-1] >= 1.0:
            raise ValueError(f"{name} must lie strictly inside (-1, 1)")
        return nodes

    dxi = _check(dual_nodes_xi, primal.n_xi, "dual_nodes_xi")
    deta = _check(dual_nodes_eta, primal.n_eta, "dual_nodes_eta")
    extended_xi = np.concatenate(([-1.0], dxi, [1.0]))
    extended_eta = np.concatenate(([-1.0], deta, [1.0]))
    completed = build_primal_complex(extended_xi, extended_eta)
    dxi = dxi.copy()
    deta = deta.copy()
    dxi.flags.writeable = False
    deta.flags.writeable = False
    return DualGrid(primal, completed, dxi, deta)
