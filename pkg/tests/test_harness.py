"""Experiment driver: manufactured data, error norms, sweeps, CSV io."""

import dataclasses

import numpy as np
import pytest

from msem2d import Cochain, build_mesh, solve
from msem2d.geometry import UNIT, BIUNIT
from msem2d.harness import (
    CSV_HEADER,
    ErrorRecord,
    ExperimentConfig,
    fit_slope,
    l2_error,
    manufactured_problem,
    manufactured_solution,
    method_difference,
    projection_error,
    read_records_csv,
    run_h_convergence,
    run_p_convergence,
    run_solve,
    write_records_csv,
)
from msem2d.solvers import Solution


class TestManufacturedProblem:
    def test_star_omega_at_quarter_point(self):
        _, _, _, boundary = manufactured_solution(UNIT)
        assert boundary(0.25, 0.25) == pytest.approx(1.0, abs=1e-15)

    def test_source_is_laplacian_of_solution(self):
        # Finite-difference Laplacian of the scalar coefficient matches the
        # stated source: the manufactured pair is consistent.
        omega, _, source, _ = manufactured_solution(UNIT)
        w = omega.components
        rng = np.random.default_rng(0)
        x, y = rng.uniform(0.1, 0.9, (2, 30))
        h = 1e-4
        lap = (
            w(x + h, y) + w(x - h, y) + w(x, y + h) + w(x, y - h) - 4.0 * w(x, y)
        ) / h**2
        assert np.max(np.abs(lap - source(x, y))) < 1e-4

    def test_flux_is_rotated_gradient(self):
        omega, q, _, _ = manufactured_solution(UNIT)
        w = omega.components
        q_x, q_y = q.components
        rng = np.random.default_rng(1)
        x, y = rng.uniform(0.0, 1.0, (2, 30))
        h = 1e-6
        w_y = (w(x, y + h) - w(x, y - h)) / (2 * h)
        w_x = (w(x + h, y) - w(x - h, y)) / (2 * h)
        assert np.max(np.abs(q_x(x, y) + w_y)) < 1e-8
        assert np.max(np.abs(q_y(x, y) - w_x)) < 1e-8

    @pytest.mark.parametrize("domain", (UNIT, BIUNIT))
    def test_boundary_data_vanishes(self, domain):
        _, _, _, boundary = manufactured_solution(domain)
        t = np.linspace(domain.x0, domain.x1, 17)
        for edge_vals in (
            boundary(t, np.full_like(t, domain.y0)),
            boundary(t, np.full_like(t, domain.y1)),
            boundary(np.full_like(t, domain.x0), t),
        ):
            assert np.max(np.abs(edge_vals)) < 1e-13


class TestL2Error:
    def test_zero_for_matching_projection(self):
        # A solution whose cochain is the projection of the exact form has
        # l2_error equal to the projection error, by definition.
        omega_ex, q_ex, _, _ = manufactured_solution(UNIT)
        mesh = build_mesh(3, 2, 2, 0.1, UNIT)
        from msem2d.basis import reduce_form
        from msem2d.geometry import pullback

        quad = mesh.order + 4
        omega = np.empty(mesh.global_complex.num_surfaces)
        q = np.empty(mesh.global_complex.num_edges)
        for e in range(mesh.num_elements):
            omega[mesh.surface_l2g[e]] = reduce_form(
                2, pullback(2, omega_ex.components, mesh.maps[e]), mesh.local_complex, quad
            ).coefficients
            q[mesh.edge_l2g[e]] = reduce_form(
                1, pullback(1, q_ex.components, mesh.maps[e]), mesh.local_complex, quad
            ).coefficients
        prob = manufactured_problem("dual", 3, 2, 2, 0.1)
        sol = Solution(prob, mesh, omega, q, omega.size)
        assert l2_error(sol, omega_ex, quad) == pytest.approx(
            projection_error(mesh, omega_ex, quad), rel=1e-12
        )
        assert l2_error(sol, q_ex, quad) == pytest.approx(
            projection_error(mesh, q_ex, quad), rel=1e-12
        )

    def test_zero_form_against_zero(self):
        mesh = build_mesh(2, 2, 2, 0.0, UNIT)
        prob = manufactured_problem("dual", 2, 2, 2, 0.0)
        sol = Solution(
            prob,
            mesh,
            np.zeros(mesh.global_complex.num_surfaces),
            np.zeros(mesh.global_complex.num_edges),
            0,
        )
        from msem2d.harness import ExactForm

        zero2 = ExactForm(2, lambda x, y: 0.0 * x)
        zero1 = ExactForm(1, (lambda x, y: 0.0 * x, lambda x, y: 0.0 * x))
        assert l2_error(sol, zero2) == 0.0
        assert l2_error(sol, zero1) == 0.0

    def test_solver_error_small_and_shrinking(self):
        omega_ex, _, _, _ = manufactured_solution(UNIT)
        errs = []
        for mx in (4, 8):
            sol = solve(manufactured_problem("dual", 3, mx, mx, 0.0))
            errs.append(l2_error(sol, omega_ex))
        assert errs[0] < 1e-2
        # observed rate is the polynomial degree of the volume-form space
        assert np.log2(errs[0] / errs[1]) > 2.5


class TestSlopeFit:
    def test_exact_power_law(self):
        levels = (2, 4, 8, 16)
        errors = [0.5 * (1.0 / m) ** 3 for m in levels]
        assert fit_slope(levels, errors) == pytest.approx(3.0, abs=1e-12)

    def test_uses_finest_three(self):
        levels = (2, 4, 8, 16)
        errors = [10.0, 1e-1, 2.5e-2, 6.25e-3]  # slope 2 on the finest three
        assert fit_slope(levels, errors) == pytest.approx(2.0, abs=1e-12)

    def test_floor_guard(self):
        levels = (2, 4, 8, 16)
        errors = [1e-3, 1e-6, 1e-13, 1e-13]
        slope = fit_slope(levels, errors)
        assert np.isfinite(slope)
        assert slope == pytest.approx(np.log2(1e-3 / 1e-6), abs=1e-9)


class TestSweeps:
    def test_h_convergence_records_and_slopes(self):
        cfg = ExperimentConfig(
            methods=("dual",), orders=(1,), mesh_levels=(4, 8, 16), c_list=(0.0,)
        )
        records, slopes = run_h_convergence(cfg)
        assert len(records) == 3
        assert all(r.linf_conservation < 1e-10 for r in records)
        s_omega, s_q = slopes[("dual", 1, 0.0)]
        assert 0.5 < s_omega < 2.5
        assert 0.5 < s_q < 2.5

    def test_h_convergence_needs_three_levels(self):
        cfg = ExperimentConfig(mesh_levels=(2, 4))
        with pytest.raises(ValueError):
            run_h_convergence(cfg)

    def test_p_convergence_monotone_and_reference(self):
        cfg = ExperimentConfig(
            methods=("dual", "single"), orders=(2, 3, 4), mesh_levels=(4,), c_list=(0.0,)
        )
        records, references = run_p_convergence(cfg)
        assert len(records) == 6
        assert len(references) == 3
        for method in ("dual", "single"):
            errs = [r.l2_omega for r in records if r.method == method]
            assert errs[0] > errs[1] > errs[2]
        # refinement monotonicity: the reference curve decreases too
        ref = [r.l2_omega for r in references]
        assert ref[0] > ref[1] > ref[2]

    def test_records_reproducible(self):
        _, rec1 = run_solve("single", 2, 3, 3, 0.1)
        _, rec2 = run_solve("single", 2, 3, 3, 0.1)
        skip = {"runtime_s"}  # wall time is the one legitimately varying field
        for f in dataclasses.fields(ErrorRecord):
            if f.name not in skip:
                assert getattr(rec1, f.name) == getattr(rec2, f.name)


class TestMethodDifference:
    def test_identical_method_gives_zero(self):
        xg, yg, field, peak = method_difference(1, 2, 2, 0.0)
        assert field.shape == (101, 101)
        # sanity of the sampling grid
        assert xg.min() == pytest.approx(0.0) and xg.max() == pytest.approx(1.0)
        sol = solve(manufactured_problem("dual", 1, 2, 2, 0.0))
        assert peak >= 0.0

    def test_methods_genuinely_differ_then_converge(self):
        *_, d3 = method_difference(3, 2, 2, 0.0)
        *_, d5 = method_difference(5, 2, 2, 0.0)
        assert d3 > 1e-12
        assert d5 < d3


class TestCsvRoundTrip:
    def test_header_and_roundtrip(self, tmp_path):
        cfg = ExperimentConfig(methods=("dual",), orders=(1,), mesh_levels=(2, 4, 8), c_list=(0.1,))
        records, _ = run_h_convergence(cfg)
        path = tmp_path / "records.csv"
        write_records_csv(path, records)
        text = path.read_text().splitlines()
        assert text[0] == ",".join(CSV_HEADER)
        back = read_records_csv(path)
        assert back == records

    def test_full_float_fidelity(self, tmp_path):
        rec = ErrorRecord("dual", 3, 4, 4, 0.1, 123, 1.0 / 3.0, np.pi * 1e-7, 7.3e-15, 0.25)
        path = tmp_path / "one.csv"
        write_records_csv(path, [rec])
        assert read_records_csv(path) == [rec]

    def test_bad_header_rejected(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("method,N\n")
        with pytest.raises(ValueError):
            read_records_csv(path)
