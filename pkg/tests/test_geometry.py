import numpy as np
import pytest

from startomo import (GeometryError, default_scheme, exit_distance,
                      make_geometry, validate_coefficients)


class TestMakeGeometry:
    def test_case_1a_unit_vectors(self):
        g = make_geometry([np.pi, 0.25 * np.pi], [1, 1], 1.0)
        np.testing.assert_allclose(g.unit_vectors[0], [0.0, -1.0], atol=1e-12)
        np.testing.assert_allclose(g.unit_vectors[1],
                                   [np.sqrt(0.5), np.sqrt(0.5)], atol=1e-12)

    def test_single_upward_ray(self):
        g = make_geometry([0.0], [1.0], 1.0)
        np.testing.assert_allclose(g.unit_vectors[0], [0.0, 1.0], atol=1e-12)
        assert g.exit_z[0] == 1.0

    def test_horizontal_ray_rejected(self):
        with pytest.raises(GeometryError):
            make_geometry([0.5 * np.pi], [1.0], 1.0)

    def test_zero_weight_rejected(self):
        with pytest.raises(GeometryError):
            make_geometry([0.0, 0.2], [1.0, 0.0], 1.0)

    def test_bad_strip_width(self):
        with pytest.raises(GeometryError):
            make_geometry([0.0], [1.0], 0.0)

    def test_length_mismatch(self):
        with pytest.raises(GeometryError):
            make_geometry([0.0, 0.1], [1.0], 1.0)

    def test_unit_norm(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            t = rng.uniform(-np.pi, np.pi)
            if abs(np.cos(t)) < 1e-3:
                continue
            g = make_geometry([t], [1.0], 2.0)
            assert abs(np.sum(g.unit_vectors[0] ** 2) - 1.0) < 1e-12


class TestExitDistance:
    def test_upward_ray_midstrip(self):
        g = make_geometry([0.25 * np.pi], [1.0], 1.0)
        # (L - L/2) / cos(pi/4)
        assert exit_distance(g, 0, 0.5) == pytest.approx(0.5 / np.cos(0.25 * np.pi))

    def test_downward_ray_midstrip(self):
        g = make_geometry([np.pi], [1.0], 1.0)
        assert exit_distance(g, 0, 0.5) == pytest.approx(0.5)

    def test_vertex_on_exit_boundary(self):
        g = make_geometry([0.0], [1.0], 1.0)
        assert exit_distance(g, 0, 1.0) == pytest.approx(0.0, abs=1e-15)

    def test_outside_strip_rejected(self):
        g = make_geometry([0.0], [1.0], 1.0)
        with pytest.raises(GeometryError):
            exit_distance(g, 0, 1.5)

    def test_endpoint_lands_on_boundary(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            t = rng.uniform(-np.pi, np.pi)
            if abs(np.cos(t)) < 1e-3:
                continue
            L = rng.uniform(0.5, 3.0)
            g = make_geometry([t], [1.0], L)
            z = rng.uniform(0, L)
            ell = exit_distance(g, 0, z)
            assert ell >= 0
            z_end = z + g.u_z[0] * ell
            assert abs(z_end - g.exit_z[0]) < 1e-12 * max(1.0, L)


class TestCoefficients:
    def test_builtin_three_ray_table(self):
        cm = validate_coefficients([[0, 1, 1], [1, 0, -2], [1, -2, 0]])
        np.testing.assert_allclose(cm.weights, [2, -1, -1])
        assert cm.eta_excluding

    def test_builtin_four_ray_table(self):
        c = [[0, 1, 1, -1], [1, 0, -1, -1], [1, -1, 0, 1], [-1, -1, 1, 0]]
        cm = validate_coefficients(c)
        np.testing.assert_allclose(cm.weights, [1, -1, 1, -1])

    def test_nonzero_total_sum_rejected(self):
        with pytest.raises(GeometryError, match="total sum"):
            validate_coefficients([[0, 1], [1, 0]])

    def test_asymmetric_rejected(self):
        with pytest.raises(GeometryError, match="symmetric"):
            validate_coefficients([[0, 1], [-1, 0]])

    def test_nonzero_diagonal_rejected(self):
        with pytest.raises(GeometryError, match="diagonal"):
            validate_coefficients([[1, 1], [1, 0]])

    def test_zero_column_sum_rejected(self):
        c = [[0, -1, 1], [-1, 0, 1], [1, 1, 0]]
        with pytest.raises(GeometryError, match="column"):
            validate_coefficients(c, require_eta_exclusion=False)

    def test_cyclic_schemes_validate(self):
        # the eta term is not cancelled by these, so only conditions
        # (ii)-(iv) apply
        for K in range(2, 9):
            cm = default_scheme(K, "uniform")
            np.testing.assert_allclose(cm.weights, np.ones(K), atol=1e-12)
            assert not cm.eta_excluding

    def test_default_zero_sum_tables(self):
        np.testing.assert_allclose(default_scheme(3, "zero-sum").weights, [2, -1, -1])
        np.testing.assert_allclose(default_scheme(4, "zero-sum").weights, [1, -1, 1, -1])
        with pytest.raises(GeometryError):
            default_scheme(5, "zero-sum")
