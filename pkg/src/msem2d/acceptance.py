"""Acceptance criteria: the quantitative exit checks of the library.

Each criterion is a standalone function returning a :class:`CriterionResult`
with a pass flag and a detailed report; :func:`run_all` executes a selection
and prints one pass/fail line per criterion.  Thresholds are fixed here and
nowhere else.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .assembly import (
    dual_edge_coboundary,
    hodge_02,
    hodge_11_dual_to_primal,
    mass_matrix,
)
from .basis import SpectralBasis1D, gauss_rule, gll_basis, gll_rule, reconstruct, reduce_form
from .geometry import UNIT, crazy_map
from .harness import (
    ExperimentConfig,
    fit_slope,
    manufactured_problem,
    manufactured_solution,
    method_difference,
    projection_error,
    run_solve,
)
from .mesh import build_mesh
from .solvers import conservation_residual, solve, source_cochain
from .topology import Chain, Cochain, build_primal_complex, coboundary, incidence_matrix

__all__ = ["CriterionResult", "run_all", "CRITERIA"]


@dataclass
class CriterionResult:
    number: int
    name: str
    passed: bool
    details: str
    elapsed: float

    @property
    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"criterion {self.number} [{self.name}]: {status} ({self.elapsed:.1f}s)"


def _result(number, name, t0, ok, lines, budget_s=None):
    elapsed = time.perf_counter() - t0
    if budget_s is not None:
        within = elapsed < budget_s
        lines = list(lines) + [f"runtime {elapsed:.1f}s (budget {budget_s:.0f}s)"]
        ok = ok and within
    return CriterionResult(number, name, bool(ok), "\n".join(lines), elapsed)


def criterion_1() -> CriterionResult:
    """Topological exactness: nilpotency and duality pairing, exactly."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(1)
    ok = True
    lines = []
    for n in range(1, 9):
        nodes = gll_rule(n).nodes
        cx = build_primal_complex(nodes, nodes)
        e10 = incidence_matrix(cx, 1).matrix
        e21 = incidence_matrix(cx, 2).matrix
        if (e21 @ e10).nnz != 0:
            ok = False
            lines.append(f"N={n}: E(2,1) E(1,0) != 0")
        for _ in range(100):
            k = int(rng.integers(0, 2))
            e = e10 if k == 0 else e21
            co = Cochain(k, rng.integers(-9, 10, cx.num_cells(k)))
            ch = Chain(k + 1, rng.integers(-9, 10, cx.num_cells(k + 1)))
            lhs = int(np.dot(e @ co.coefficients, ch.coefficients))
            rhs = int(np.dot(co.coefficients, e.T @ ch.coefficients))
            if lhs != rhs:
                ok = False
                lines.append(f"N={n}: duality pairing violated at degree {k}")
                break
    lines.append("nilpotency and duality pairing exact for N = 1..8, 100 integer pairs each")
    return _result(1, "topological exactness", t0, ok, lines, budget_s=1.0)


def criterion_2() -> CriterionResult:
    """Basis dualities: nodal Kronecker and unit segment integrals."""
    t0 = time.perf_counter()
    ok = True
    lines = []
    worst_h, worst_e = 0.0, 0.0
    for n in range(1, 13):
        b = gll_basis(n)
        kron = np.max(np.abs(b.lagrange_all(b.nodes) - np.eye(n + 1)))
        worst_h = max(worst_h, kron)
        qx, qw = gauss_rule(n + 2)
        lo, hi = b.nodes[:-1], b.nodes[1:]
        pts = 0.5 * (hi - lo)[:, None] * qx[None, :] + 0.5 * (hi + lo)[:, None]
        wts = 0.5 * (hi - lo)[:, None] * qw[None, :]
        vals = b.edge_all(pts.ravel()).reshape(n, n, -1)  # [i-1, segment, m]
        integrals = np.einsum("ipm,pm->ip", vals, wts)
        dev = np.max(np.abs(integrals - np.eye(n)))
        worst_e = max(worst_e, dev)
        if kron >= 1e-13 or dev >= 1e-12:
            ok = False
            lines.append(f"N={n}: kronecker {kron:.2e}, segment integral {dev:.2e}")
    lines.append(f"worst nodal Kronecker deviation {worst_h:.2e} (< 1e-13)")
    lines.append(f"worst edge segment-integral deviation {worst_e:.2e} (< 1e-12)")
    return _result(2, "basis dualities", t0, ok, lines, budget_s=1.0)


def _random_poly(rng, deg):
    coef = rng.uniform(-1.0, 1.0, (deg + 1, deg + 1))

    def f(x, y):
        return np.polynomial.polynomial.polyval2d(x, y, coef)

    def fx(x, y):
        return np.polynomial.polynomial.polyval2d(x, y, np.polynomial.polynomial.polyder(coef, axis=0))

    def fy(x, y):
        return np.polynomial.polynomial.polyval2d(x, y, np.polynomial.polynomial.polyder(coef, axis=1))

    return f, fx, fy


def criterion_3() -> CriterionResult:
    """Commuting diagrams for reduction, reconstruction and projection."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(3)
    tol = 1e-10
    quad = 12
    worst = {"Rd=dR (0)": 0.0, "Rd=dR (1)": 0.0, "dI=Id (0)": 0.0, "dI=Id (1)": 0.0,
             "pid=dpi (0)": 0.0, "pid=dpi (1)": 0.0}
    for trial in range(50):
        n = int(rng.integers(2, 7))
        b = gll_basis(n)
        cx = build_primal_complex(b.nodes, b.nodes)
        f, fx, fy = _random_poly(rng, 5)
        g, gx, gy = _random_poly(rng, 5)

        # reduction commutes with the derivative: 0-forms and 1-forms
        r0 = reduce_form(0, f, cx, quad)
        r1 = reduce_form(1, (fx, fy), cx, quad)
        worst["Rd=dR (0)"] = max(worst["Rd=dR (0)"],
                                 float(np.max(np.abs(coboundary(r0, cx).coefficients - r1.coefficients))))
        u1 = reduce_form(1, (f, g), cx, quad)
        curl = lambda x, y: gx(x, y) - fy(x, y)
        r2 = reduce_form(2, curl, cx, quad)
        worst["Rd=dR (1)"] = max(worst["Rd=dR (1)"],
                                 float(np.max(np.abs(coboundary(u1, cx).coefficients - r2.coefficients))))

        # reconstruction commutes with the derivative, at random points
        pts = rng.uniform(-1.0, 1.0, (2, 20))
        c0 = Cochain(0, rng.standard_normal((n + 1) ** 2))
        da, db = reconstruct(c0, b).derivative_at(pts[0], pts[1])
        ia, ib = reconstruct(coboundary(c0, cx), b).evaluate_at(pts[0], pts[1])
        worst["dI=Id (0)"] = max(worst["dI=Id (0)"],
                                 float(max(np.max(np.abs(da - ia)), np.max(np.abs(db - ib)))))
        c1 = Cochain(1, rng.standard_normal(2 * n * (n + 1)))
        dw = reconstruct(c1, b).derivative_at(pts[0], pts[1])
        iw = reconstruct(coboundary(c1, cx), b).evaluate_at(pts[0], pts[1])
        worst["dI=Id (1)"] = max(worst["dI=Id (1)"], float(np.max(np.abs(dw - iw))))

        # projection commutes with the derivative
        p0 = reconstruct(reduce_form(0, f, cx, quad), b)
        pd = reconstruct(reduce_form(1, (fx, fy), cx, quad), b)
        a1, b1_ = p0.derivative_at(pts[0], pts[1])
        a2, b2 = pd.evaluate_at(pts[0], pts[1])
        worst["pid=dpi (0)"] = max(worst["pid=dpi (0)"],
                                   float(max(np.max(np.abs(a1 - a2)), np.max(np.abs(b1_ - b2)))))
        p1 = reconstruct(u1, b)
        pd2 = reconstruct(r2, b)
        worst["pid=dpi (1)"] = max(worst["pid=dpi (1)"],
                                   float(np.max(np.abs(p1.derivative_at(pts[0], pts[1])
                                                       - pd2.evaluate_at(pts[0], pts[1])))))
    ok = all(v < tol for v in worst.values())
    lines = [f"{k}: worst deviation {v:.2e} (< 1e-10)" for k, v in worst.items()]
    lines.append("50 random degree-5 polynomial forms per diagram")
    return _result(3, "commuting diagrams", t0, ok, lines, budget_s=10.0)


def criterion_4() -> CriterionResult:
    """Conservation to machine precision for both methods on all meshes."""
    t0 = time.perf_counter()
    tol = 1e-10
    worst = 0.0
    worst_case = None
    for method in ("dual", "single"):
        for c in (0.0, 0.1, 0.2):
            for order in (1, 2, 3):
                for m in (2, 4, 8):
                    problem = manufactured_problem(method, order, m, m, c)
                    sol = solve(problem)
                    res = conservation_residual(sol, source_cochain(problem, sol.mesh))
                    if res > worst:
                        worst, worst_case = res, (method, c, order, m)
    ok = worst < tol
    lines = [f"worst conservation residual {worst:.2e} at {worst_case} (< 1e-10)",
             "both methods, c in {0, 0.1, 0.2}, N in {1,2,3}, meshes {2,4,8}"]
    return _result(4, "conservation", t0, ok, lines, budget_s=120.0)


def criterion_5() -> CriterionResult:
    """h-convergence slopes and dual/single agreement."""
    t0 = time.perf_counter()
    cfg = ExperimentConfig(methods=("dual", "single"), orders=(1, 2, 3),
                           mesh_levels=(2, 4, 8, 16), c_list=(0.0, 0.1, 0.2))
    by_case = {}
    slopes = {}
    for method in cfg.methods:
        for order in cfg.orders:
            for c in cfg.c_list:
                errs = []
                for m in cfg.mesh_levels:
                    _, rec = run_solve(method, order, m, m, c, cfg.domain)
                    errs.append(rec)
                by_case[(method, order, c)] = errs
                slopes[(method, order, c)] = (
                    fit_slope(cfg.mesh_levels, [r.l2_omega for r in errs]),
                    fit_slope(cfg.mesh_levels, [r.l2_q for r in errs]),
                )
    ok = True
    lines = []
    for order in cfg.orders:
        for c in cfg.c_list:
            s_d = slopes[("dual", order, c)]
            s_s = slopes[("single", order, c)]
            target = order + 1
            window_ok = all(abs(s - target) <= 0.3 for s in (*s_d, *s_s))
            agree_ok = abs(s_d[0] - s_s[0]) <= 0.1 and abs(s_d[1] - s_s[1]) <= 0.1
            rel = []
            for rd, rs in zip(by_case[("dual", order, c)], by_case[("single", order, c)]):
                rel.append(abs(rd.l2_omega - rs.l2_omega) / max(rd.l2_omega, 1e-300))
                rel.append(abs(rd.l2_q - rs.l2_q) / max(rd.l2_q, 1e-300))
            close_ok = max(rel) <= 0.05
            case_ok = window_ok and agree_ok and close_ok
            ok = ok and case_ok
            lines.append(
                f"N={order} c={c}: slopes dual ({s_d[0]:.2f}, {s_d[1]:.2f})"
                f" single ({s_s[0]:.2f}, {s_s[1]:.2f}) vs target {target}+-0.3"
                f" [{'ok' if window_ok else 'OUT'}];"
                f" method slope gap {'ok' if agree_ok else 'OUT'};"
                f" max rel error gap {max(rel) * 100:.1f}% {'ok' if close_ok else 'OUT (>5%)'}"
            )
    return _result(5, "h-convergence", t0, ok, lines, budget_s=600.0)


def criterion_6() -> CriterionResult:
    """p-convergence: monotone spectral decay against the projection curve."""
    t0 = time.perf_counter()
    plateau = 1e-11
    omega_ex, _, _, _ = manufactured_solution(UNIT)
    ok = True
    lines = []
    for m in (2, 4):
        for method in ("dual", "single"):
            errs, projs = [], []
            for order in range(2, 9):
                _, rec = run_solve(method, order, m, m, 0.0, UNIT)
                errs.append(rec.l2_omega)
                projs.append(projection_error(build_mesh(order, m, m, 0.0, UNIT), omega_ex))
            errs = np.array(errs)
            projs = np.array(projs)
            live = errs > plateau
            mono = bool(np.all(np.diff(errs[live]) < 0.0))
            span = errs[live][0] / errs[live][-1] if np.count_nonzero(live) >= 2 else np.inf
            decades = float(np.log10(span))
            above = bool(np.all(errs[live] >= projs[live]))
            case_ok = mono and decades >= 6.0 and above
            ok = ok and case_ok
            worst_gap = float(np.min(errs[live] / projs[live]))
            lines.append(
                f"{m}x{m} {method}: monotone={'yes' if mono else 'NO'},"
                f" decay {decades:.2f} decades (need >= 6),"
                f" solver/projection min ratio {worst_gap:.3f}"
                f" ({'ok' if above else 'BELOW projection'})"
            )
    return _result(6, "p-convergence", t0, ok, lines, budget_s=300.0)


def criterion_7() -> CriterionResult:
    """The two methods differ pointwise, less so at higher order."""
    t0 = time.perf_counter()
    *_, d3 = method_difference(3, 2, 2, 0.0, UNIT)
    *_, d5 = method_difference(5, 2, 2, 0.0, UNIT)
    ok = d3 > 1e-12 and d5 < d3
    lines = [f"L-inf gap N=3: {d3:.3e} (> 1e-12), N=5: {d5:.3e} (strictly smaller: {d5 < d3})"]
    return _result(7, "method non-identity", t0, ok, lines)


def criterion_8() -> CriterionResult:
    """Deformation changes metric matrices only, never incidence matrices."""
    t0 = time.perf_counter()
    order, m = 3, 2
    incidences = {}
    metrics = {}
    for c in (0.0, 0.1, 0.2):
        mesh = build_mesh(order, m, m, c, UNIT)
        e10 = incidence_matrix(mesh.global_complex, 1).matrix
        e21 = incidence_matrix(mesh.global_complex, 2).matrix
        incidences[c] = (e10.indptr.copy(), e10.indices.copy(), e10.data.copy(),
                         e21.indptr.copy(), e21.indices.copy(), e21.data.copy())
        cmap = mesh.maps[0]
        ext = SpectralBasis1D.from_nodes(np.concatenate(([-1.0], mesh.dual_nodes, [1.0])))
        dnb = SpectralBasis1D.from_nodes(mesh.dual_nodes)
        metrics[c] = (
            mass_matrix(1, mesh.basis, cmap).matrix,
            mass_matrix(2, mesh.basis, cmap).matrix,
            hodge_02(mesh.basis, mesh.dual_nodes, cmap).matrix,
            hodge_11_dual_to_primal(ext, dnb, mesh.basis, cmap).matrix,
        )
    same = all(
        all(np.array_equal(a, b) for a, b in zip(incidences[0.0], incidences[c]))
        for c in (0.1, 0.2)
    )
    gaps = [float(np.linalg.norm(m0 - m2)) for m0, m2 in zip(metrics[0.0], metrics[0.2])]
    differ = all(g > 1e-3 for g in gaps)
    ok = same and differ
    lines = [
        f"incidence matrices bitwise identical across c: {'yes' if same else 'NO'}",
        "metric matrix norm gaps c=0 vs c=0.2 "
        + ", ".join(f"{name}={g:.3e}" for name, g in zip(("M1", "M2", "H02", "H11"), gaps))
        + " (each > 1e-3)",
    ]
    return _result(8, "metric/topology separation", t0, ok, lines)


CRITERIA = {
    1: criterion_1,
    2: criterion_2,
    3: criterion_3,
    4: criterion_4,
    5: criterion_5,
    6: criterion_6,
    7: criterion_7,
    8: criterion_8,
}


def run_all(numbers=None, verbose: bool = True) -> list:
    """Run the selected criteria (all by default), printing one line each."""
    numbers = sorted(numbers) if numbers else sorted(CRITERIA)
    results = []
    for num in numbers:
        res = CRITERIA[num]()
        results.append(res)
        if verbose:
            print(res.line)
            for detail in res.details.splitlines():
                print(f"    {detail}")
    return results
