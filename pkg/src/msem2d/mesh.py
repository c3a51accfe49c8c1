"""Multi-element spectral mesh: tiling, index maps and shared bases.

A mesh tiles a rectangular domain with mx x my congruent elements, each
carrying the same Gauss-Lobatto grid on its reference square.  Because the
union of all element grids is itself a tensor grid, the global complex is a
single tensor-product cell complex; local-to-global index arrays connect
per-element degrees of freedom to it.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .basis import SpectralBasis1D, gauss_rule, gll_basis
from .geometry import BIUNIT, CurvilinearMap, Rect, crazy_map
from .topology import TensorCellComplex, build_primal_complex

__all__ = ["Mesh2D", "build_mesh"]


@dataclass(frozen=True)
class Mesh2D:
    """Tiling of a rectangular domain with deformed spectral elements."""

    order: int
    mx: int
    my: int
    c: float
    domain: Rect
    basis: SpectralBasis1D
    dual_nodes: np.ndarray

    @property
    def num_elements(self) -> int:
        return self.mx * self.my

    def element_index(self, ex: int, ey: int) -> int:
        return ey * self.mx + ex

    @cached_property
    def element_rects(self) -> list:
        """Undeformed rectangle of each element, in element index order."""
        xs = np.linspace(self.domain.x0, self.domain.x1, self.mx + 1)
        ys = np.linspace(self.domain.y0, self.domain.y1, self.my + 1)
        return [
            Rect(xs[ex], xs[ex + 1], ys[ey], ys[ey + 1])
            for ey in range(self.my)
            for ex in range(self.mx)
        ]

    @cached_property
    def maps(self) -> list:
        return [crazy_map(self.c, rect, self.domain) for rect in self.element_rects]

    @cached_property
    def local_complex(self) -> TensorCellComplex:
        """Reference-square complex shared by every element."""
        return build_primal_complex(self.basis.nodes, self.basis.nodes)

    @cached_property
    def global_complex(self) -> TensorCellComplex:
        """Tensor complex over the union of all element grids (normalized)."""
        return build_primal_complex(self._global_nodes(self.mx), self._global_nodes(self.my))

    def _global_nodes(self, m: int) -> np.ndarray:
        edges = np.linspace(-1.0, 1.0, m + 1)
        parts = [np.array([-1.0])]
        for k in range(m):
            lo, hi = edges[k], edges[k + 1]
            parts.append(lo + 0.5 * (self.basis.nodes[1:] + 1.0) * (hi - lo))
        return np.concatenate(parts)

    @cached_property
    def surface_l2g(self) -> np.ndarray:
        """Global surface index of each local surface, shape (n_elem, N^2)."""
        n, g = self.order, self.global_complex
        out = np.empty((self.num_elements, n * n), dtype=np.int64)
        li, lj = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), indexing="ij")
        lflat = self.local_complex.surface_index(li, lj).ravel()
        for ey in range(self.my):
            for ex in range(self.mx):
                gidx = g.surface_index(ex * n + li, ey * n + lj).ravel()
                out[self.element_index(ex, ey), lflat] = gidx
        return out

    @cached_property
    def edge_l2g(self) -> np.ndarray:
        """Global edge index of each local edge, shape (n_elem, 2N(N+1))."""
        n, g, lc = self.order, self.global_complex, self.local_complex
        out = np.empty((self.num_elements, 2 * n * (n + 1)), dtype=np.int64)
        xi_i, xi_j = np.meshgrid(np.arange(1, n + 1), np.arange(0, n + 1), indexing="ij")
        eta_i, eta_j = np.meshgrid(np.arange(0, n + 1), np.arange(1, n + 1), indexing="ij")
        l_xi = lc.xi_edge_index(xi_i, xi_j).ravel()
        l_eta = lc.eta_edge_index(eta_i, eta_j).ravel()
        for ey in range(self.my):
            for ex in range(self.mx):
                e = self.element_index(ex, ey)
                out[e, l_xi] = g.xi_edge_index(ex * n + xi_i, ey * n + xi_j).ravel()
                out[e, l_eta] = g.eta_edge_index(ex * n + eta_i, ey * n + eta_j).ravel()
        return out

    @cached_property
    def quad_cache(self) -> dict:
        return {}

    def quad(self, order: int):
        if order not in self.quad_cache:
            self.quad_cache[order] = gauss_rule(order)
        return self.quad_cache[order]


def build_mesh(order: int, mx: int, my: int, c: float, domain: Rect | tuple = BIUNIT) -> Mesh2D:
    if order < 1:
        raise ValueError(f"order must be at least 1, got {order}")
    if mx < 1 or my < 1:
        raise ValueError("element counts must be at least 1 per direction")
    if not isinstance(domain, Rect):
        domain = Rect(*domain)
    basis = gll_basis(order)
    dual_nodes = gauss_rule(order)[0]
    dual_nodes.flags.writeable = False
    return Mesh2D(order, mx, my, float(c), domain, basis, dual_nodes)
