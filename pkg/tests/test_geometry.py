"""Element maps: sine deformation, Jacobians, metric data, pullbacks."""

import numpy as np
import pytest

from msem2d import BIUNIT, UNIT, Rect, SingularMapError, crazy_map, metric_at, pullback
from msem2d.basis import gauss_rule


class TestCrazyMap:
    def test_zero_deformation_is_identity_on_biunit(self):
        cmap = crazy_map(0.0, BIUNIT)
        xi = np.linspace(-1.0, 1.0, 7)
        x, y = cmap(xi, xi[::-1])
        assert np.allclose(x, xi, atol=1e-15)
        assert np.allclose(y, xi[::-1], atol=1e-15)

    def test_center_is_a_fixed_point(self):
        x, y = crazy_map(0.1, BIUNIT)(0.0, 0.0)
        assert x == pytest.approx(0.0, abs=1e-15)
        assert y == pytest.approx(0.0, abs=1e-15)

    def test_direct_substitution_value(self):
        # (0.5, 0.5) + 0.2 sin(pi/2)^2 (1, 1) = (0.7, 0.7) on the biunit square
        x, y = crazy_map(0.2, BIUNIT)(0.5, 0.5)
        assert x == pytest.approx(0.7, abs=1e-15)
        assert y == pytest.approx(0.7, abs=1e-15)

    def test_boundary_stays_fixed(self):
        cmap = crazy_map(0.2, BIUNIT)
        t = np.linspace(-1.0, 1.0, 9)
        x, y = cmap(np.full_like(t, -1.0), t)
        assert np.allclose(x, -1.0, atol=1e-15)

    def test_deformation_bound(self):
        with pytest.raises(ValueError):
            crazy_map(1.0 / np.pi, BIUNIT)
        with pytest.raises(ValueError):
            crazy_map(-0.5, BIUNIT)

    def test_element_outside_domain_rejected(self):
        with pytest.raises(ValueError):
            crazy_map(0.1, Rect(0.0, 2.0, 0.0, 1.0), UNIT)

    @pytest.mark.parametrize("c", (0.0, 0.1, 0.2))
    def test_jacobian_matches_finite_differences(self, c):
        cmap = crazy_map(c, Rect(0.0, 0.5, 0.5, 1.0), UNIT)
        rng = np.random.default_rng(1)
        xi, eta = rng.uniform(-0.9, 0.9, (2, 50))
        step = 1e-5
        xp, yp = cmap(xi + step, eta)
        xm, ym = cmap(xi - step, eta)
        fd = [(xp - xm) / (2 * step), (yp - ym) / (2 * step)]
        xp, yp = cmap(xi, eta + step)
        xm, ym = cmap(xi, eta - step)
        fd += [(xp - xm) / (2 * step), (yp - ym) / (2 * step)]
        j11, j12, j21, j22 = cmap.jacobian(xi, eta)
        for got, want in zip((j11, j21, j12, j22), fd):
            assert np.max(np.abs(got - want) / np.maximum(1.0, np.abs(want))) < 1e-6

    def test_positive_determinant_everywhere(self):
        cmap = crazy_map(0.2, Rect(0.5, 1.0, 0.0, 0.5), UNIT)
        grid = np.linspace(-1.0, 1.0, 21)
        xi, eta = np.meshgrid(grid, grid, indexing="ij")
        assert np.all(cmap.jacobian_det(xi.ravel(), eta.ravel()) > 0.0)


class TestMetric:
    def test_identity_on_undeformed_biunit(self):
        g = metric_at(crazy_map(0.0, BIUNIT), np.array([0.3]), np.array([-0.5]))
        got = np.concatenate([g.det, g.g11, g.g12, g.g22])
        assert np.allclose(got, [1.0, 1.0, 0.0, 1.0], atol=1e-15)

    def test_affine_quarter_scaling(self):
        # Element [0,1]^2 mapped from the biunit reference square: det J = 1/4.
        g = metric_at(crazy_map(0.0, Rect(0.0, 1.0, 0.0, 1.0)), np.array([0.2]), np.array([0.9]))
        assert g.det[0] == pytest.approx(0.25, abs=1e-15)

    def test_metric_spd_on_deformed_elements(self):
        cmap = crazy_map(0.2, Rect(-1.0, 0.0, 0.0, 1.0))
        grid = np.linspace(-1.0, 1.0, 11)
        xi, eta = np.meshgrid(grid, grid, indexing="ij")
        g = metric_at(cmap, xi.ravel(), eta.ravel())
        assert np.all(g.g11 > 0)
        assert np.all(g.g11 * g.g22 - g.g12**2 > 0)

    def test_determinant_against_finite_differences(self):
        cmap = crazy_map(0.1, BIUNIT)
        step = 1e-5
        pt = (np.array([0.0]), np.array([0.0]))
        xp, _ = cmap(pt[0] + step, pt[1])
        xm, _ = cmap(pt[0] - step, pt[1])
        _, yp = cmap(pt[0], pt[1] + step)
        _, ym = cmap(pt[0], pt[1] - step)
        j11 = (xp - xm) / (2 * step)
        j22 = (yp - ym) / (2 * step)
        _, yxp = cmap(pt[0] + step, pt[1])
        _, yxm = cmap(pt[0] - step, pt[1])
        xyp, _ = cmap(pt[0], pt[1] + step)
        xym, _ = cmap(pt[0], pt[1] - step)
        j21 = (yxp - yxm) / (2 * step)
        j12 = (xyp - xym) / (2 * step)
        det_fd = j11 * j22 - j12 * j21
        g = metric_at(cmap, *pt)
        assert abs(g.det[0] - det_fd[0]) < 1e-7

    def test_singular_map_detected(self):
        squashed = crazy_map(0.0, BIUNIT)
        bad = type(squashed)(0.0, Rect(-1, 1, -1, 1), Rect(-1, 1, -1, 1))

        class Collapsed:
            def jacobian(self, xi, eta):
                z = np.zeros_like(np.asarray(xi, dtype=float))
                return z, z, z, z

        with pytest.raises(SingularMapError):
            metric_at(Collapsed(), np.array([0.0]), np.array([0.0]))
        assert bad is not None


class TestPullback:
    def test_two_form_under_identity(self):
        f2 = pullback(2, lambda x, y: 1.0, crazy_map(0.0, BIUNIT))
        xi = np.linspace(-1.0, 1.0, 5)
        assert np.allclose(f2(xi, xi), 1.0, atol=1e-15)

    def test_zero_form_composition(self):
        cmap = crazy_map(0.2, BIUNIT)
        f0 = pullback(0, lambda x, y: x + 2 * y, cmap)
        x, y = cmap(0.3, -0.4)
        assert f0(0.3, -0.4) == pytest.approx(x + 2 * y, abs=1e-14)

    def test_commutes_with_derivative(self):
        cmap = crazy_map(0.15, BIUNIT)
        f = lambda x, y: np.sin(x) * y**2
        fx = lambda x, y: np.cos(x) * y**2
        fy = lambda x, y: 2.0 * np.sin(x) * y
        f_ref = pullback(0, f, cmap)
        a, b = pullback(1, (fx, fy), cmap)
        rng = np.random.default_rng(2)
        xi, eta = rng.uniform(-1.0, 1.0, (2, 20))
        step = 1e-6
        d_xi = (np.asarray(f_ref(xi + step, eta)) - np.asarray(f_ref(xi - step, eta))) / (2 * step)
        d_eta = (np.asarray(f_ref(xi, eta + step)) - np.asarray(f_ref(xi, eta - step))) / (2 * step)
        assert np.max(np.abs(a(xi, eta) - d_xi)) < 1e-8
        assert np.max(np.abs(b(xi, eta) - d_eta)) < 1e-8

    def test_integral_invariance_two_form(self):
        # Integral of the sine product over the deformed image of the biunit
        # square is zero by odd symmetry; the pullback integral must agree.
        cmap = crazy_map(0.1, BIUNIT)
        f2 = pullback(2, lambda x, y: np.sin(2 * np.pi * x) * np.sin(2 * np.pi * y), cmap)
        qx, qw = gauss_rule(40)
        xi, eta = np.meshgrid(qx, qx, indexing="ij")
        w2 = qw[:, None] * qw[None, :]
        total = np.sum(w2.ravel() * f2(xi.ravel(), eta.ravel()))
        assert abs(total) < 1e-10

    def test_integral_invariance_one_form_on_curve(self):
        # Pull back an exact 1-form; its line integral along the image of a
        # reference segment equals the potential difference of the endpoints.
        cmap = crazy_map(0.2, BIUNIT)
        pot = lambda x, y: x**2 * y + np.cos(y)
        fx = lambda x, y: 2 * x * y
        fy = lambda x, y: x**2 - np.sin(y)
        a, b = pullback(1, (fx, fy), cmap)
        qx, qw = gauss_rule(40)
        eta0 = 0.3
        line = np.sum(qw * a(qx, np.full_like(qx, eta0)))
        x1, y1 = cmap(1.0, eta0)
        x0, y0 = cmap(-1.0, eta0)
        assert line == pytest.approx(pot(x1, y1) - pot(x0, y0), abs=1e-12)
