"""Experiment driver: manufactured solves, error norms, convergence sweeps.

The manufactured problem prescribes the volume form with scalar coefficient
sin(2*pi*x)*sin(2*pi*y); its source is -8*pi^2 times the same product and
the Dirichlet data (the trace of the star of the unknown) is taken from the
exact solution, which vanishes on the boundary of both supported domains.
Mesh size is reported as h = 1 / (elements per side).
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .assembly import form_component_arrays
from .basis import gauss_rule, reduce_form
from .geometry import UNIT, Rect, pullback
from .mesh import Mesh2D, build_mesh
from .solvers import PoissonProblem, Solution, conservation_residual, solve, source_cochain
from .topology import Cochain

__all__ = [
    "ExactForm",
    "ErrorRecord",
    "ExperimentConfig",
    "manufactured_solution",
    "manufactured_problem",
    "l2_error",
    "projection_error",
    "run_solve",
    "run_h_convergence",
    "run_p_convergence",
    "fit_slope",
    "method_difference",
    "write_records_csv",
    "read_records_csv",
    "records_to_csv_text",
    "CSV_HEADER",
]

ERROR_QUAD_MARGIN = 4
CSV_HEADER = ["method", "N", "Mx", "My", "c", "dof", "l2_omega", "l2_q", "linf_conservation", "runtime_s"]


@dataclass(frozen=True)
class ExactForm:
    """Evaluable k-form in physical coordinates.

    ``components`` is a scalar callable for degrees 0 and 2 (the coefficient
    of the form) and an (dx, dy) callable pair for degree 1.
    """

    degree: int
    components: object


def manufactured_solution(domain: Rect = UNIT):
    """Exact solution, flux, source and boundary data of the test problem.

    Returns (omega, q, source, boundary): the exact 2-form, its flux 1-form
    (the rotated gradient of the scalar coefficient), the source coefficient
    and the boundary trace callable.
    """
    two_pi = 2.0 * np.pi

    def w(x, y):
        return np.sin(two_pi * x) * np.sin(two_pi * y)

    def f(x, y):
        return -8.0 * np.pi**2 * np.sin(two_pi * x) * np.sin(two_pi * y)

    def q_x(x, y):
        # minus the y-derivative of the scalar coefficient
        return -two_pi * np.sin(two_pi * x) * np.cos(two_pi * y)

    def q_y(x, y):
        return two_pi * np.cos(two_pi * x) * np.sin(two_pi * y)

    return ExactForm(2, w), ExactForm(1, (q_x, q_y)), f, w


def manufactured_problem(
    method: str,
    order: int,
    mx: int,
    my: int,
    c: float,
    domain: Rect = UNIT,
    quad_order: int | None = None,
) -> PoissonProblem:
    _, _, source, boundary = manufactured_solution(domain)
    return PoissonProblem(method, order, mx, my, c, source, boundary, domain, quad_order)


def _omega_sq_error(mesh: Mesh2D, local_omega, exact_w, quad_order: int) -> float:
    qn, qw = gauss_rule(quad_order)
    w2 = (qw[:, None] * qw[None, :]).ravel()
    xi, eta = np.meshgrid(qn, qn, indexing="ij")
    xi, eta = xi.ravel(), eta.ravel()
    psi2 = form_component_arrays(mesh.basis, qn, qn, 2)
    from .geometry import metric_at

    total = 0.0
    for e in range(mesh.num_elements):
        g = metric_at(mesh.maps[e], xi, eta)
        x, y = mesh.maps[e](xi, eta)
        w_h = local_omega(e) @ psi2
        err = w_h - exact_w(x, y) * g.det
        total += float(np.sum(w2 * err**2 / g.det))
    return total


def _q_sq_error(mesh: Mesh2D, local_q, exact_pair, quad_order: int) -> float:
    qn, qw = gauss_rule(quad_order)
    w2 = (qw[:, None] * qw[None, :]).ravel()
    xi, eta = np.meshgrid(qn, qn, indexing="ij")
    xi, eta = xi.ravel(), eta.ravel()
    psi_a, psi_b = form_component_arrays(mesh.basis, qn, qn, 1)
    q_x, q_y = exact_pair
    from .geometry import metric_at

    total = 0.0
    for e in range(mesh.num_elements):
        g = metric_at(mesh.maps[e], xi, eta)
        x, y = mesh.maps[e](xi, eta)
        j11, j12, j21, j22 = g.jac
        lq = local_q(e)
        e_a = lq @ psi_a - (q_x(x, y) * j11 + q_y(x, y) * j21)
        e_b = lq @ psi_b - (q_x(x, y) * j12 + q_y(x, y) * j22)
        total += float(
            np.sum(w2 * g.det * (g.g11 * e_a**2 + 2.0 * g.g12 * e_a * e_b + g.g22 * e_b**2))
        )
    return total


def l2_error(sol: Solution, exact: ExactForm, quad_order: int | None = None) -> float:
    """L2 norm of (reconstructed solution minus exact form) over the mesh.

    Uses the k-form inner product with the element metric terms, integrated
    per element with a Gauss rule of ``quad_order`` points per direction
    (default: order + 4).
    """
    if quad_order is None:
        quad_order = sol.mesh.order + ERROR_QUAD_MARGIN
    if exact.degree == 2:
        return float(np.sqrt(_omega_sq_error(sol.mesh, sol.local_omega, exact.components, quad_order)))
    if exact.degree == 1:
        return float(np.sqrt(_q_sq_error(sol.mesh, sol.local_q, exact.components, quad_order)))
    raise ValueError("l2_error supports degree-1 and degree-2 forms")


def projection_error(mesh: Mesh2D, exact: ExactForm, quad_order: int | None = None) -> float:
    """L2 error of the mimetic projection of an exact form onto the mesh."""
    if quad_order is None:
        quad_order = mesh.order + ERROR_QUAD_MARGIN
    if exact.degree == 2:
        def local(e):
            ref = pullback(2, exact.components, mesh.maps[e])
            return reduce_form(2, ref, mesh.local_complex, quad_order).coefficients

        return float(np.sqrt(_omega_sq_error(mesh, local, exact.components, quad_order)))
    if exact.degree == 1:
        def local(e):
            ref = pullback(1, exact.components, mesh.maps[e])
            return reduce_form(1, ref, mesh.local_complex, quad_order).coefficients

        return float(np.sqrt(_q_sq_error(mesh, local, exact.components, quad_order)))
    raise ValueError("projection_error supports degree-1 and degree-2 forms")


@dataclass(frozen=True)
class ErrorRecord:
    """One solve's errors and diagnostics, as written to CSV."""

    method: str
    N: int
    Mx: int
    My: int
    c: float
    dof: int
    l2_omega: float
    l2_q: float
    linf_conservation: float
    runtime_s: float


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep configuration for the convergence drivers."""

    methods: tuple = ("dual", "single")
    orders: tuple = (1, 2, 3)
    mesh_levels: tuple = (2, 4, 8, 16)
    c_list: tuple = (0.0, 0.1, 0.2)
    domain: Rect = UNIT
    quad_order: int | None = None
    seed: int = 0

    def __post_init__(self):
        if not (self.methods and self.orders and self.mesh_levels and self.c_list):
            raise ValueError("experiment sweeps must be non-empty")
        for method in self.methods:
            if method not in ("dual", "single"):
                raise ValueError(f"unknown method {method!r}")


def run_solve(
    method: str,
    order: int,
    mx: int,
    my: int,
    c: float,
    domain: Rect = UNIT,
    quad_order: int | None = None,
):
    """Solve the manufactured problem once; return (solution, error record)."""
    problem = manufactured_problem(method, order, mx, my, c, domain, quad_order)
    sol = solve(problem)
    omega_ex, q_ex, _, _ = manufactured_solution(domain)
    f_h = source_cochain(problem, sol.mesh)
    record = ErrorRecord(
        method=method,
        N=order,
        Mx=mx,
        My=my,
        c=c,
        dof=sol.num_unknowns,
        l2_omega=l2_error(sol, omega_ex),
        l2_q=l2_error(sol, q_ex),
        linf_conservation=conservation_residual(sol, f_h),
        runtime_s=sol.diagnostics.get("runtime_s", float("nan")),
    )
    return sol, record


def fit_slope(levels, errors, floor: float = 1e-11, use_finest: int = 3) -> float:
    """Least-squares slope of log(error) against log(h) over the finest levels.

    h is 1 / (elements per side).  Levels whose error has fallen to the
    round-off floor are excluded before fitting.
    """
    levels = np.asarray(levels, dtype=float)
    errors = np.asarray(errors, dtype=float)
    keep = errors > floor
    levels, errors = levels[keep], errors[keep]
    if levels.size < 2:
        return float("nan")
    sel = np.argsort(levels)[-use_finest:]
    x = np.log(1.0 / levels[sel])
    y = np.log(errors[sel])
    slope = np.polyfit(x, y, 1)[0]
    return float(slope)


def run_h_convergence(cfg: ExperimentConfig):
    """Solve every (method, N, level, c) and fit slopes per (method, N, c).

    Returns (records, slopes) where slopes maps (method, N, c) to the fitted
    (omega, q) slope pair over the finest levels.
    """
    if len(cfg.mesh_levels) < 3:
        raise ValueError("h-convergence needs at least 3 mesh levels")
    records = []
    slopes = {}
    for method in cfg.methods:
        for order in cfg.orders:
            for c in cfg.c_list:
                errs_o, errs_q = [], []
                for m in cfg.mesh_levels:
                    _, rec = run_solve(method, order, m, m, c, cfg.domain, cfg.quad_order)
                    records.append(rec)
                    errs_o.append(rec.l2_omega)
                    errs_q.append(rec.l2_q)
                slopes[(method, order, c)] = (
                    fit_slope(cfg.mesh_levels, errs_o),
                    fit_slope(cfg.mesh_levels, errs_q),
                )
    return records, slopes


def run_p_convergence(cfg: ExperimentConfig):
    """Sweep the order at fixed meshes; also report projection references.

    Returns (records, references) where references holds one ErrorRecord per
    (N, mesh, c) with method "projection": the L2 error of the mimetic
    projection of the exact solution, the benchmark curve of the sweep.
    """
    omega_ex, q_ex, _, _ = manufactured_solution(cfg.domain)
    records, references = [], []
    for m in cfg.mesh_levels:
        for c in cfg.c_list:
            for order in cfg.orders:
                for method in cfg.methods:
                    _, rec = run_solve(method, order, m, m, c, cfg.domain, cfg.quad_order)
                    records.append(rec)
                mesh = build_mesh(order, m, m, c, cfg.domain)
                references.append(
                    ErrorRecord(
                        method="projection",
                        N=order,
                        Mx=m,
                        My=m,
                        c=c,
                        dof=mesh.global_complex.num_surfaces,
                        l2_omega=projection_error(mesh, omega_ex),
                        l2_q=projection_error(mesh, q_ex),
                        linf_conservation=0.0,
                        runtime_s=0.0,
                    )
                )
    return records, references


def method_difference(
    order: int,
    mx: int,
    my: int,
    c: float = 0.0,
    domain: Rect = UNIT,
    samples: int = 101,
):
    """Pointwise gap between the two methods' reconstructed solutions.

    Samples both scalar fields on a uniform samples x samples grid of the
    undeformed domain (each point is pushed through the element map, so for
    c != 0 the sample sites are the deformed images of a uniform grid).
    Returns (x_grid, y_grid, |difference| field, max over the field).
    """
    from .basis import reconstruct
    from .geometry import metric_at

    sols = {}
    for method in ("dual", "single"):
        problem = manufactured_problem(method, order, mx, my, c, domain)
        sols[method] = solve(problem)
    mesh = sols["dual"].mesh
    us = np.linspace(mesh.domain.x0, mesh.domain.x1, samples)
    vs = np.linspace(mesh.domain.y0, mesh.domain.y1, samples)
    x_edges = np.linspace(mesh.domain.x0, mesh.domain.x1, mx + 1)
    y_edges = np.linspace(mesh.domain.y0, mesh.domain.y1, my + 1)
    field = np.zeros((samples, samples))
    xg = np.zeros((samples, samples))
    yg = np.zeros((samples, samples))
    for ey in range(my):
        sel_y = np.nonzero((vs >= y_edges[ey]) & (vs <= y_edges[ey + 1]))[0]
        for ex in range(mx):
            sel_x = np.nonzero((us >= x_edges[ex]) & (us <= x_edges[ex + 1]))[0]
            e = mesh.element_index(ex, ey)
            rect = mesh.element_rects[e]
            xi = 2.0 * (us[sel_x] - rect.x0) / rect.lx - 1.0
            eta = 2.0 * (vs[sel_y] - rect.y0) / rect.ly - 1.0
            xi_g, eta_g = np.meshgrid(xi, eta, indexing="ij")
            det = metric_at(mesh.maps[e], xi_g.ravel(), eta_g.ravel()).det
            w_d = reconstruct(Cochain(2, sols["dual"].local_omega(e)), mesh.basis)
            w_s = reconstruct(Cochain(2, sols["single"].local_omega(e)), mesh.basis)
            diff = np.abs(
                w_d.evaluate_at(xi_g.ravel(), eta_g.ravel())
                - w_s.evaluate_at(xi_g.ravel(), eta_g.ravel())
            ) / det
            field[np.ix_(sel_x, sel_y)] = diff.reshape(xi_g.shape)
            px, py = mesh.maps[e](xi_g.ravel(), eta_g.ravel())
            xg[np.ix_(sel_x, sel_y)] = px.reshape(xi_g.shape)
            yg[np.ix_(sel_x, sel_y)] = py.reshape(xi_g.shape)
    return xg, yg, field, float(field.max())


def records_to_csv_text(records) -> str:
    """Render records as CSV with shortest round-trip float formatting."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(
            [
                rec.method,
                rec.N,
                rec.Mx,
                rec.My,
                repr(float(rec.c)),
                rec.dof,
                repr(float(rec.l2_omega)),
                repr(float(rec.l2_q)),
                repr(float(rec.linf_conservation)),
                repr(float(rec.runtime_s)),
            ]
        )
    return buf.getvalue()


def write_records_csv(path, records) -> None:
    with open(path, "w", newline="") as fh:
        fh.write(records_to_csv_text(records))


def read_records_csv(path) -> list:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        out = []
        for row in reader:
            out.append(
                ErrorRecord(
                    method=row[0],
                    N=int(row[1]),
                    Mx=int(row[2]),
                    My=int(row[3]),
                    c=float(row[4]),
                    dof=int(row[5]),
                    l2_omega=float(row[6]),
                    l2_q=float(row[7]),
                    linf_conservation=float(row[8]),
                    runtime_s=float(row[9]),
                )
            )
        return out
