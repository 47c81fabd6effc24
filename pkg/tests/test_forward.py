import numpy as np
import pytest
from scipy.integrate import quad

import startomo as st
from startomo.phantoms import SQUARE_HALF_SIDE_FRACTION


class TestRayIntegral:
    def test_empty_phantom(self, case):
        ph = st.Phantom((), 1.0)
        assert st.ray_integral(ph, case["2a"], 0, (0.3, 0.4)) == 0.0

    def test_ray_missing_square(self, square, case):
        # downward ray from below the square never meets it
        assert st.ray_integral(square, case["2a"], 0, (0.0, 0.2)) == 0.0

    def test_vertical_ray_through_square(self, square, case):
        # Case 2a ray 0 points straight down; from above the square it
        # crosses the full vertical extent
        got = st.ray_integral(square, case["2a"], 0, (0.0, 0.9))
        want = 5.0 * 2 * SQUARE_HALF_SIDE_FRACTION
        assert got == pytest.approx(want, rel=1e-12)

    def test_vertex_outside_strip(self, square, case):
        with pytest.raises(ValueError):
            st.ray_integral(square, case["2a"], 0, (0.0, 1.2))


class TestStarTransform:
    def test_empty_phantom_zero_field(self, case):
        data = st.star_transform(st.Phantom((), 1.0), case["2a"], 63)
        assert np.all(data.values == 0.0)

    def test_single_ray_reduction(self, square):
        g = st.make_geometry([0.2], [1.0], 1.0)
        data = st.star_transform(square, g, 63)
        grid = data.grid
        iy = (grid.n_y - 1) // 2
        z = grid.z_coords()[40]
        want = st.ray_integral(square, g, 0, (grid.y_coords()[iy], z))
        assert data.values[iy, 40] == pytest.approx(want, rel=1e-12)

    def test_linearity_in_amplitude(self, case):
        g = case["2a"]
        ph1 = st.make_square_phantom(1.0)
        ph2 = st.Phantom((st.Rectangle(ph1.primitives[0].center,
                                       ph1.primitives[0].half_widths,
                                       2 * ph1.primitives[0].amplitude),), 1.0)
        grid = st.plan_grid(ph1, g, 63)
        d1 = st.star_transform(ph1, g, 63, grid=grid)
        d2 = st.star_transform(ph2, g, 63, grid=grid)
        np.testing.assert_allclose(d2.values, 2 * d1.values, atol=1e-12)

    def test_compact_support_in_y(self, square, case):
        data = st.star_transform(square, case["2a"], 63)
        # the window covers support half-width + slope * L; columns at the
        # window edge are exactly zero
        assert np.all(data.values[0, :] == 0.0)
        assert np.all(data.values[-1, :] == 0.0)

    def test_samples_match_quadrature(self, square, case):
        g = case["2a"]
        data = st.star_transform(square, g, 63)
        grid = data.grid
        rng = np.random.default_rng(0)
        for _ in range(5):
            iy = int(rng.integers(0, grid.n_y))
            iz = int(rng.integers(0, grid.n_z + 2))
            y, z = grid.y_coords()[iy], grid.z_coords()[iz]
            want = 0.0
            for k in range(g.K):
                ell = st.exit_distance(g, k, z)
                want += g.weights[k] * quad(
                    lambda t: st.point_value(square, y + g.u_y[k] * t,
                                             z + g.u_z[k] * t),
                    0, ell, limit=200)[0]
            assert data.values[iy, iz] == pytest.approx(want, abs=1e-8)


class TestPairwise:
    def test_k2_pair_is_sum_of_rays(self, square, case):
        g = case["1a"]
        grid = st.plan_grid(square, g, 63)
        pairs = st.pairwise_fields(square, g, 63, grid=grid)
        assert len(pairs) == 1 and (pairs[0].j, pairs[0].k) == (0, 1)
        d0 = st.star_transform(square, st.make_geometry([g.theta[0]], [1.0], 1.0),
                               63, grid=grid)
        d1 = st.star_transform(square, st.make_geometry([g.theta[1]], [1.0], 1.0),
                               63, grid=grid)
        np.testing.assert_allclose(pairs[0].values, d0.values + d1.values,
                                   atol=1e-12)

    def test_uniform_average_identity(self, square, case):
        # (1/(2(K-1))) sum over all ordered pairs equals sum_k I_k
        g = case["2a"]
        grid = st.plan_grid(square, g, 63)
        pairs = st.pairwise_fields(square, g, 63, grid=grid)
        total = sum(p.values for p in pairs) / (g.K - 1)
        want = st.star_transform(square, g, 63, grid=grid).values
        np.testing.assert_allclose(total, want, atol=1e-12)

    def test_single_ray_isolation(self, square, case):
        # c13 = c23 = 1/2, c12 = -1/2 isolates I_3 when eta = 0
        g = case["2a"]
        grid = st.plan_grid(square, g, 63)
        pairs = st.pairwise_fields(square, g, 63, grid=grid, eta=0.0)
        c = 0.5 * np.array([[0, -1, 1], [-1, 0, 1], [1, 1, 0.0]])
        got = st.combine_pairs(pairs, c)
        i3 = st.star_transform(square, st.make_geometry([g.theta[2]], [1.0], 1.0),
                               63, grid=grid)
        np.testing.assert_allclose(got.values, i3.values, atol=1e-12)

    def test_eta_exclusion(self, square, case):
        g = case["3b"]
        grid = st.plan_grid(square, g, 63)
        contrast = st.Rectangle((0.1, 0.55), (0.12, 0.2), 0.7)
        ph_eta = st.Phantom(square.primitives, 1.0, scatter_contrast=(contrast,))
        scheme = st.validate_coefficients([[0, 2, -1], [2, 0, -1], [-1, -1, 0]])
        with_eta = st.combine_pairs(
            st.pairwise_fields(ph_eta, g, 63, grid=grid), scheme)
        without = st.combine_pairs(
            st.pairwise_fields(square, g, 63, grid=grid, eta=0.0), scheme)
        np.testing.assert_allclose(with_eta.values, without.values, atol=1e-12)

    def test_combine_matches_star_transform(self, square, case):
        # column sums of the scheme are the star weights
        g3 = case["3b"]  # weights (1, 1, -2)
        grid = st.plan_grid(square, g3, 63)
        scheme = st.validate_coefficients([[0, 2, -1], [2, 0, -1], [-1, -1, 0]])
        np.testing.assert_allclose(scheme.weights, g3.weights)
        got = st.combine_pairs(st.pairwise_fields(square, g3, 63, grid=grid),
                               scheme)
        want = st.star_transform(square, g3, 63, grid=grid)
        np.testing.assert_allclose(got.values, want.values, atol=1e-12)

    def test_missing_pair_rejected(self, square, case):
        pairs = st.pairwise_fields(square, case["2a"], 63)[:2]
        with pytest.raises(ValueError, match="missing"):
            st.combine_pairs(pairs, st.default_scheme(3, "uniform"))

    def test_all_zero_fields(self, case):
        pairs = st.pairwise_fields(st.Phantom((), 1.0), case["2a"], 63, eta=0.0)
        out = st.combine_pairs(pairs, st.default_scheme(3, "uniform"))
        assert np.all(out.values == 0.0)


class TestPoissonNoise:
    def make_pair(self, value, n=201):
        grid = st.DataGrid(1.0, 63, 1, n)
        vals = np.full((grid.n_y, grid.n_z + 2), value)
        return st.PairwiseField(grid, 0, 1, vals)

    def test_mean_counts_at_zero_signal(self):
        pair = self.make_pair(0.0)
        noisy = st.add_poisson_noise(pair, 40000, seed=1)
        # phi = 0 -> mean count 40000, relative std 1/200
        assert np.exp(-noisy.values).mean() == pytest.approx(1.0, abs=1e-3)

    def test_large_event_limit(self):
        pair = self.make_pair(1.0)
        noisy = st.add_poisson_noise(pair, 10**8, seed=2)
        resid = noisy.values - pair.values
        # predicted std is exp(phi/2)/sqrt(events) ~ 1.65e-4 < 2e-4
        assert resid.std() < 2e-4
        assert resid.std() == pytest.approx(np.exp(0.5) / 1e4, rel=0.1)

    def test_std_tracks_prediction_across_range(self):
        grid = st.DataGrid(1.0, 125, 1, 401)
        vals = np.tile(np.linspace(0.0, 5.0, grid.n_z + 2), (grid.n_y, 1))
        pair = st.PairwiseField(grid, 0, 1, vals)
        noisy = st.add_poisson_noise(pair, 10**6, seed=3)
        resid = noisy.values - vals
        predicted = 1.0 / np.sqrt(10**6 * np.exp(-vals))
        ratio = resid.std() / np.sqrt((predicted**2).mean())
        assert 0.8 < ratio < 1.25

    def test_determinism(self):
        pair = self.make_pair(2.0)
        a = st.add_poisson_noise(pair, 10000, seed=7)
        b = st.add_poisson_noise(pair, 10000, seed=7)
        assert np.array_equal(a.values, b.values)
        c = st.add_poisson_noise(pair, 10000, seed=8)
        assert not np.array_equal(a.values, c.values)

    def test_pair_indices_decorrelate(self):
        grid = st.DataGrid(1.0, 63, 1, 201)
        vals = np.full((grid.n_y, grid.n_z + 2), 1.0)
        a = st.add_poisson_noise(st.PairwiseField(grid, 0, 1, vals), 10000, seed=7)
        b = st.add_poisson_noise(st.PairwiseField(grid, 0, 2, vals), 10000, seed=7)
        assert not np.array_equal(a.values, b.values)

    def test_zero_count_clamp(self):
        # phi so large that the expected count rounds to zero
        pair = self.make_pair(30.0)
        noisy = st.add_poisson_noise(pair, 100, seed=1)
        assert noisy.clamped == noisy.values.size
        np.testing.assert_allclose(noisy.values, -np.log(1 / 100))

    def test_invalid_events(self):
        with pytest.raises(ValueError):
            st.add_poisson_noise(self.make_pair(0.0), 0, seed=1)


class TestAnalyticDataCoefficients:
    def test_against_sampled_transform(self, square, case):
        # norm-weighted agreement across several frequency columns; the
        # sampled side carries the quadrature/aliasing error
        g = case["2a"]
        data = st.star_transform(square, g, 125, oversample=4)
        table = st.field_to_coefficients(data)
        sel = np.abs(table.harmonics) <= 40
        num = den = 0.0
        for off in (3, 5, 11, 29):
            mi = len(table.q) // 2 + off
            want = st.analytic_data_coefficients(square, g, table.q[mi],
                                                 table.harmonics[sel])
            got = table.values[sel, mi]
            num += np.sum(np.abs(got - want) ** 2)
            den += np.sum(np.abs(want) ** 2)
        assert np.sqrt(num / den) < 2e-2

    def test_lattice_oracle_single_entry(self, square, case):
        # independent midpoint-rule check on a fine lattice (different
        # quadrature and code path from the closed form)
        g = case["1a"]
        q, n = 4.1, 3
        got = st.analytic_data_coefficients(square, g, q, [n])[0]
        kap = 2 * np.pi * n
        ny, nz = 3001, 1501
        y = np.linspace(-1.3, 1.3, ny)
        z = (np.arange(nz) + 0.5) / nz
        hy, hz = y[1] - y[0], z[1] - z[0]
        Y, Z = np.meshgrid(y, z, indexing="ij")
        vals = np.zeros_like(Y)
        for k in range(g.K):
            ell = (g.exit_z[k] - Z) / g.u_z[k]
            chord = square.primitives[0].chord(Y, Z, g.u_y[k], g.u_z[k], ell)
            vals += g.weights[k] * 5.0 * chord
        want = hy * hz * np.sum(vals * np.exp(-1j * (q * Y + kap * Z)))
        assert got == pytest.approx(want, abs=5e-5)

    def test_rejects_ellipses(self, case):
        ph = st.make_shepp_logan(1.0)
        with pytest.raises(TypeError):
            st.analytic_data_coefficients(ph, case["2a"], 1.0, [0])


def _phi_point(phantom, geometry, y, z):
    total = 0.0
    for k in range(geometry.K):
        total += geometry.weights[k] * st.ray_integral(phantom, geometry, k, (y, z))
    return total
