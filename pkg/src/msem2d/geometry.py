"""Curvilinear element mappings, Jacobians, metric data and pullbacks.

Elements are rectangles of a tiling of a global domain, deformed by a smooth
sine perturbation applied in normalized global coordinates.  Because the
deformation acts on the whole domain after the affine tiling, neighbouring
elements stay conforming and the deformation vanishes on the domain boundary.
Jacobians are evaluated from closed-form partial derivatives.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "SingularMapError",
    "Rect",
    "CurvilinearMap",
    "MetricData",
    "crazy_map",
    "pullback",
    "metric_at",
]

MAX_DEFORMATION = 1.0 / np.pi


class SingularMapError(ValueError):
    """The element map degenerates (non-positive Jacobian determinant)."""


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle (x0, x1) x (y0, y1)."""

    x0: float
    x1: float
    y0: float
    y1: float

    def __post_init__(self):
        if not (self.x1 > self.x0 and self.y1 > self.y0):
            raise ValueError("rectangle sides must have positive length")

    @property
    def lx(self) -> float:
        return self.x1 - self.x0

    @property
    def ly(self) -> float:
        return self.y1 - self.y0

    def contains(self, other: "Rect", tol: float = 1e-12) -> bool:
        return (
            other.x0 >= self.x0 - tol
            and other.x1 <= self.x1 + tol
            and other.y0 >= self.y0 - tol
            and other.y1 <= self.y1 + tol
        )


BIUNIT = Rect(-1.0, 1.0, -1.0, 1.0)
UNIT = Rect(0.0, 1.0, 0.0, 1.0)


@dataclass(frozen=True)
class CurvilinearMap:
    """Map from the reference square [-1, 1]^2 onto a deformed element.

    The composition is: affine placement of the reference square onto the
    element rectangle inside the (undeformed) global domain, followed by the
    sine deformation of the whole domain expressed in normalized domain
    coordinates u = 2 (P - P0) / L - 1:

        u -> u + c sin(pi u_1) sin(pi u_2) (1, 1)

    With c = 0 the map reduces to the affine tile placement exactly.  The
    deformation keeps the domain boundary fixed and is invertible for
    |c| < 1/pi.
    """

    c: float
    element: Rect
    domain: Rect

    def _to_normalized(self, xi, eta):
        """Reference coords -> normalized global coords of the undeformed point."""
        x = self.element.x0 + 0.5 * (np.asarray(xi, dtype=float) + 1.0) * self.element.lx
        y = self.element.y0 + 0.5 * (np.asarray(eta, dtype=float) + 1.0) * self.element.ly
        u = 2.0 * (x - self.domain.x0) / self.domain.lx - 1.0
        v = 2.0 * (y - self.domain.y0) / self.domain.ly - 1.0
        return u, v

    def __call__(self, xi, eta):
        """Physical coordinates (x, y) of reference points (xi, eta)."""
        u, v = self._to_normalized(xi, eta)
        bump = self.c * np.sin(np.pi * u) * np.sin(np.pi * v)
        ud = u + bump
        vd = v + bump
        x = self.domain.x0 + 0.5 * (ud + 1.0) * self.domain.lx
        y = self.domain.y0 + 0.5 * (vd + 1.0) * self.domain.ly
        return x, y

    def jacobian(self, xi, eta):
        """Entries (dx/dxi, dx/deta, dy/dxi, dy/deta), broadcast over points."""
        u, v = self._to_normalized(xi, eta)
        s_u = np.pi * self.c * np.cos(np.pi * u) * np.sin(np.pi * v)
        s_v = np.pi * self.c * np.sin(np.pi * u) * np.cos(np.pi * v)
        # d(normalized)/d(reference) for each direction.
        a_x = self.element.lx / self.domain.lx
        a_y = self.element.ly / self.domain.ly
        half_lx = 0.5 * self.domain.lx
        half_ly = 0.5 * self.domain.ly
        j11 = half_lx * (1.0 + s_u) * a_x
        j12 = half_lx * s_v * a_y
        j21 = half_ly * s_u * a_x
        j22 = half_ly * (1.0 + s_v) * a_y
        shape = np.broadcast(np.asarray(xi), np.asarray(eta)).shape
        return tuple(np.broadcast_to(e, shape).copy() for e in (j11, j12, j21, j22))

    def jacobian_det(self, xi, eta):
        j11, j12, j21, j22 = self.jacobian(xi, eta)
        return j11 * j22 - j12 * j21


def crazy_map(c: float, element: Rect | tuple, domain: Rect | tuple = BIUNIT) -> CurvilinearMap:
    """Sine-deformed element map with deformation coefficient c.

    ``element`` is the rectangle the element occupies inside the undeformed
    global ``domain``; both accept (x0, x1, y0, y1) tuples.  Requires
    |c| < 1/pi, which keeps the deformed map orientation preserving.
    """
    if abs(c) >= MAX_DEFORMATION:
        raise ValueError(f"deformation coefficient must satisfy |c| < 1/pi, got {c}")
    if not isinstance(element, Rect):
        element = Rect(*element)
    if not isinstance(domain, Rect):
        domain = Rect(*domain)
    if not domain.contains(element):
        raise ValueError("element rectangle must lie inside the global domain")
    return CurvilinearMap(float(c), element, domain)


@dataclass(frozen=True)
class MetricData:
    """Per-point Jacobian, determinant and contravariant metric components."""

    jac: tuple
    det: np.ndarray
    g11: np.ndarray
    g12: np.ndarray
    g22: np.ndarray


def metric_at(cmap: CurvilinearMap, xi, eta) -> MetricData:
    """Jacobian, determinant and g^{ij} = (J^{-1} J^{-T})_{ij} at the points.

    Raises :class:`SingularMapError` when the determinant drops to or below
    1e-12 anywhere.
    """
    j11, j12, j21, j22 = cmap.jacobian(xi, eta)
    det = j11 * j22 - j12 * j21
    if np.any(det <= 1e-12):
        raise SingularMapError("element map is singular or orientation reversing")
    # J^{-1} = [[j22, -j12], [-j21, j11]] / det; g^{ij} = (J^{-1} J^{-T})_{ij}.
    g11 = (j22 * j22 + j12 * j12) / det**2
    g12 = -(j22 * j21 + j12 * j11) / det**2
    g22 = (j21 * j21 + j11 * j11) / det**2
    return MetricData((j11, j12, j21, j22), det, g11, g12, g22)


def pullback(degree: int, components, cmap: CurvilinearMap):
    """Pull a physical k-form back to the reference square of an element.

    Returns reference-space component callables: composition with the map
    for 0-forms, contraction with the Jacobian transpose for 1-forms, and
    multiplication by the Jacobian determinant for the 2-form coefficient.
    Integrals are invariant: the integral of the pullback over a reference
    region equals the integral of the form over its image.
    """
    if degree == 0:
        f = components if callable(components) else components[0]

        def f0(xi, eta):
            x, y = cmap(xi, eta)
            return f(x, y)

        return f0
    if degree == 1:
        f_x, f_y = components

        def a(xi, eta):
            x, y = cmap(xi, eta)
            j11, _, j21, _ = cmap.jacobian(xi, eta)
            return f_x(x, y) * j11 + f_y(x, y) * j21

        def b(xi, eta):
            x, y = cmap(xi, eta)
            _, j12, _, j22 = cmap.jacobian(xi, eta)
            return f_x(x, y) * j12 + f_y(x, y) * j22

        return a, b
    if degree == 2:
        f = components if callable(components) else components[0]

        def f2(xi, eta):
            x, y = cmap(xi, eta)
            return f(x, y) * cmap.jacobian_det(xi, eta)

        return f2
    raise ValueError(f"form degree must be 0, 1 or 2, got {degree}")
