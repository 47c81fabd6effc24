import numpy as np
import pytest
from scipy.special import erf

import startomo as st
from startomo import GeometryError

from conftest import interior_rel_l2


def equilateral():
    return st.make_geometry([0.0, 2 * np.pi / 3, -2 * np.pi / 3], [1, 1, 1], 1.0)


class TestSolveSigmas:
    def test_equilateral_unit_sigmas(self):
        scheme = st.solve_sigmas(equilateral())
        np.testing.assert_allclose(scheme.sigma, [1, 1, 1], atol=1e-12)
        assert scheme.zeta == pytest.approx(3.0)

    def test_conditions_hold(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            K = int(rng.integers(3, 6))
            angles = []
            while len(angles) < K:
                t = rng.uniform(-np.pi, np.pi)
                if abs(np.cos(t)) > 0.1:
                    angles.append(t)
            g = st.make_geometry(angles, np.ones(K), 1.0)
            try:
                scheme = st.solve_sigmas(g)
            except GeometryError:
                continue
            c = scheme.c
            su = scheme.sigma[:, None] * g.unit_vectors
            # (i) total sum zero, (ii) zero diagonal, (iii) symmetry,
            # (iv) column sums sigma_k u_k
            assert np.max(np.abs(c.sum(axis=(0, 1)))) < 1e-9
            assert np.max(np.abs(c[np.arange(K), np.arange(K)])) == 0.0
            assert np.max(np.abs(c - np.swapaxes(c, 0, 1))) < 1e-12
            np.testing.assert_allclose(c.sum(axis=0), su, atol=1e-9)
            # closure
            np.testing.assert_allclose(su.sum(axis=0), [0, 0], atol=1e-9)

    def test_hub_arrangement(self):
        # four rays; the hub ray's scalar is zero and the other three close
        g = st.make_geometry([np.pi, 0.0, 2 * np.pi / 3, -2 * np.pi / 3],
                             [1, 1, 1, 1], 1.0)
        scheme = st.solve_sigmas(g, zero_set={0})
        assert scheme.sigma[0] == 0.0
        su = scheme.sigma[:, None] * g.unit_vectors
        np.testing.assert_allclose(su.sum(axis=0), [0, 0], atol=1e-10)
        # only hub pairs are populated
        for j in range(1, 4):
            for k in range(j + 1, 4):
                assert np.all(scheme.c[j, k] == 0.0)
        np.testing.assert_allclose(scheme.c.sum(axis=0), su, atol=1e-10)

    def test_two_rays_rejected(self):
        g = st.make_geometry([0.1, 2.0], [1, 1], 1.0)
        with pytest.raises(GeometryError):
            st.solve_sigmas(g)


class TestVectorCombine:
    def test_zero_fields(self):
        g = equilateral()
        scheme = st.solve_sigmas(g)
        pairs = st.pairwise_fields(st.Phantom((), 1.0), g, 63, eta=0.0)
        vf = st.vector_combine(pairs, scheme)
        assert np.all(vf.y_component == 0.0) and np.all(vf.z_component == 0.0)

    def test_matches_weighted_ray_sum(self, square):
        g = equilateral()
        scheme = st.solve_sigmas(g)
        grid = st.plan_grid(square, g, 63)
        pairs = st.pairwise_fields(square, g, 63, grid=grid, eta=0.0)
        vf = st.vector_combine(pairs, scheme)
        want_y = np.zeros_like(vf.y_component)
        want_z = np.zeros_like(vf.z_component)
        for k in range(g.K):
            single = st.star_transform(square,
                                       st.make_geometry([g.theta[k]], [1.0], 1.0),
                                       63, grid=grid)
            want_y += scheme.sigma[k] * g.u_y[k] * single.values
            want_z += scheme.sigma[k] * g.u_z[k] * single.values
        np.testing.assert_allclose(vf.y_component, want_y, atol=1e-12)
        np.testing.assert_allclose(vf.z_component, want_z, atol=1e-12)

    def test_constant_contrast_cancels(self, square):
        g = equilateral()
        scheme = st.solve_sigmas(g)
        grid = st.plan_grid(square, g, 63)
        base = st.vector_combine(
            st.pairwise_fields(square, g, 63, grid=grid, eta=0.0), scheme)
        shifted = st.vector_combine(
            st.pairwise_fields(square, g, 63, grid=grid, eta=0.7), scheme)
        np.testing.assert_allclose(shifted.y_component, base.y_component,
                                   atol=1e-10)
        np.testing.assert_allclose(shifted.z_component, base.z_component,
                                   atol=1e-10)

    def test_missing_pair(self, square):
        g = equilateral()
        scheme = st.solve_sigmas(g)
        pairs = st.pairwise_fields(square, g, 63, eta=0.0)[:2]
        with pytest.raises(ValueError):
            st.vector_combine(pairs, scheme)


class TestDivergenceReconstruct:
    def test_affine_field_exact(self):
        grid = st.DataGrid(1.0, 63, 1, 129)
        Y, Z = np.meshgrid(grid.y_coords(), grid.z_coords(), indexing="ij")
        vf = st.VectorField(grid, 2.0 * Y, -3.0 * Z)
        img = st.divergence_reconstruct(vf, zeta=4.0)
        np.testing.assert_allclose(img.values, (3.0 - 2.0) / 4.0, atol=1e-10)

    def test_zero_zeta_rejected(self):
        grid = st.DataGrid(1.0, 63, 1, 129)
        vf = st.VectorField(grid, np.zeros((129, 65)), np.zeros((129, 65)))
        with pytest.raises(GeometryError):
            st.divergence_reconstruct(vf, zeta=0.0)

    def test_square_phantom_reconstruction(self, square, square_truth_125):
        g = equilateral()
        scheme = st.solve_sigmas(g)
        pairs = st.pairwise_fields(square, g, 125, oversample=2, eta=0.0)
        img = st.divergence_reconstruct(st.vector_combine(pairs, scheme),
                                        scheme.zeta)
        assert interior_rel_l2(img, square_truth_125) < 0.10

    def test_single_ray_identity_second_order(self):
        # -(u . grad) I = mu for one ray; a gaussian bump with erf-form ray
        # integrals shows the second-order convergence of the stencil
        sigma_g, cy, cz = 0.08, 0.03, 0.47
        theta = 0.2 * np.pi
        uy, uz = np.sin(theta), np.cos(theta)

        def ray_field(Y, Z):
            t0 = -((Y - cy) * uy + (Z - cz) * uz)
            d2 = (Y - cy) ** 2 + (Z - cz) ** 2 - t0**2
            ell = (1.0 - Z) / uz
            pref = np.exp(-d2 / (2 * sigma_g**2)) * sigma_g * np.sqrt(np.pi / 2)
            a = (0 - t0) / (np.sqrt(2) * sigma_g)
            b = (ell - t0) / (np.sqrt(2) * sigma_g)
            return pref * (erf(b) - erf(a))

        errs = []
        sizes = (63, 125, 249)
        for N in sizes:
            h = 1.0 / (N + 1)
            y = (np.arange(N + 2) - (N + 1) / 2) * h
            z = np.arange(0, N + 2) * h
            Y, Z = np.meshgrid(y, z, indexing="ij")
            I = ray_field(Y, Z)
            rec = -(uy * (I[2:, 1:-1] - I[:-2, 1:-1]) / (2 * h)
                    + uz * (I[1:-1, 2:] - I[1:-1, :-2]) / (2 * h))
            Yi, Zi = Y[1:-1, 1:-1], Z[1:-1, 1:-1]
            mu = np.exp(-((Yi - cy) ** 2 + (Zi - cz) ** 2) / (2 * sigma_g**2))
            keep = (Zi > 0.1) & (Zi < 0.9)
            errs.append(np.linalg.norm((rec - mu)[keep])
                        / np.linalg.norm(mu[keep]))
        for i in range(2):
            order = (np.log(errs[i] / errs[i + 1])
                     / np.log((sizes[i + 1] + 1) / (sizes[i] + 1)))
            assert 1.7 <= order <= 2.3

    def test_agrees_with_fourier_reconstruction(self, square, case):
        # local and spectral inversions of compatible noiseless data agree
        # to within their combined discretization error
        g = equilateral()
        scheme = st.solve_sigmas(g)
        pairs = st.pairwise_fields(square, g, 125, oversample=2, eta=0.0)
        local_img = st.divergence_reconstruct(st.vector_combine(pairs, scheme),
                                              scheme.zeta)
        data = st.star_transform(square, case["2a"], 125, oversample=4)
        fourier_img = st.reconstruct(data, case["2a"], method="direct").image
        sl = slice(2, -2)
        diff = np.linalg.norm((local_img.values - fourier_img.values)[sl, sl])
        assert diff / np.linalg.norm(fourier_img.values[sl, sl]) < 0.10
