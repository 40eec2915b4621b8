import numpy as np
import pytest

from aenet.discretization import (
    DiscreteFunction,
    Grid1D,
    box_counting_dimension,
    discretize,
    make_quadrature,
    weighted_norm,
)
from aenet.pde_data import (
    GRFSpec,
    IntrinsicParams,
    add_noise,
    burgers_field_pair,
    burgers_ic,
    grf_draw,
    hat,
    kdv_ic,
    load_dataset,
    make_dataset,
    sample_grf,
    save_dataset,
    solve_burgers,
    solve_kdv,
    solve_transport,
    transport_ic,
)

GRID = Grid1D(0.0, 1.0, 512, "closed")
PGRID = Grid1D(0.0, 1.0, 512, "periodic")
KGRID = Grid1D(0.0, 6.0, 512, "periodic")


class TestHat:
    def test_left_foot_is_zero(self):
        assert hat(1.0, 0.1)(0.1) == 0.0

    def test_peak_value(self):
        assert hat(1.0, 0.1)(0.125) == pytest.approx(1.0)
        assert hat(2.5, 0.2)(0.225) == pytest.approx(2.5)

    def test_support_ends(self):
        assert hat(2.5, 0.2)(0.25) == pytest.approx(0.0, abs=1e-12)
        assert hat(2.5, 0.2)(0.6) == pytest.approx(0.0, abs=1e-12)


class TestTransportIC:
    def test_peak_locations(self):
        g = transport_ic(IntrinsicParams("transport", 1.0, 0.0))
        assert g(0.125) == pytest.approx(1.0)
        assert g(0.225) == pytest.approx(2.5)

    def test_second_hat_shift(self):
        # h = 1 puts the second bump's support start at 0.3
        g = transport_ic(IntrinsicParams("transport", 4.0, 1.0))
        assert g(0.3) == pytest.approx(0.0, abs=1e-12)
        assert g(0.325) == pytest.approx(2.5)

    def test_nonnegative(self):
        x = np.linspace(0, 1, 2001)
        for a, h in [(1, 0), (4, 1), (2.2, 0.5)]:
            assert np.all(transport_ic(IntrinsicParams("transport", a, h))(x) >= 0)

    def test_out_of_range_rejected(self):
        with pytest.raises(ValueError):
            IntrinsicParams("transport", 5.0, 0.0)
        with pytest.raises(ValueError):
            IntrinsicParams("transport", 1.0, -0.1)


class TestSolveTransport:
    def test_zero_time_identity(self):
        g = transport_ic(IntrinsicParams("transport", 2.0, 0.3))
        u = solve_transport(g, GRID, t=0.0)
        assert np.allclose(u.values, discretize(g, GRID).values)

    def test_shifted_peak(self):
        g = transport_ic(IntrinsicParams("transport", 1.0, 0.0))
        u = solve_transport(g, GRID, t=0.3)
        x = GRID.nodes()
        i = np.argmax(np.abs(x - 0.425) < GRID.spacing)
        assert np.max(u.values[i - 1 : i + 2]) > 0.95

    def test_pure_shift_of_support(self):
        f = hat(1.0, 0.15)  # supported in [0.15, 0.2]
        u = solve_transport(f, GRID, t=0.3)
        x = GRID.nodes()
        assert np.all(u.values[x < 0.45 - 1e-12] == pytest.approx(0.0, abs=1e-12))
        assert np.all(u.values[x > 0.5 + 1e-12] == pytest.approx(0.0, abs=1e-12))

    def test_exactness_against_direct_discretization(self):
        # the solver must agree with sampling g(. - t) with zero inflow
        g = transport_ic(IntrinsicParams("transport", 3.1, 0.62))
        u = solve_transport(g, GRID, t=0.3)
        x = GRID.nodes()
        direct = np.where(x >= 0.3, g(x - 0.3), 0.0)
        assert np.max(np.abs(u.values - direct)) <= 1e-14


class TestGRF:
    spec = GRFSpec(n_modes=128)

    def test_requires_periodic_grid(self):
        with pytest.raises(ValueError, match="periodic"):
            sample_grf(self.spec, GRID, 0)

    def test_seed_determinism(self):
        a = sample_grf(self.spec, PGRID, 42)
        b = sample_grf(self.spec, PGRID, 42)
        assert np.array_equal(a.values, b.values)

    def test_pointwise_variance_matches_eigenvalue_sum(self):
        lam = self.spec.eigenvalues()
        target = 2 * lam.sum()
        rng_seeds = range(10_000)
        draws = np.stack([
            grf_draw(self.spec, s)(np.array([0.0, 0.25, 0.7])) for s in rng_seeds
        ])
        var = draws.var(axis=0)
        assert np.all(np.abs(var - target) < 0.05 * target)

    def test_mean_is_zero(self):
        draws = np.stack([
            grf_draw(self.spec, s)(np.array([0.1, 0.5, 0.9])) for s in range(10_000)
        ])
        stderr = draws.std(axis=0) / np.sqrt(draws.shape[0])
        assert np.all(np.abs(draws.mean(axis=0)) < 3 * stderr)

    def test_mode_variance_ratios(self):
        # empirical per-mode variance follows the eigenvalue decay
        lam = self.spec.eigenvalues()
        n_draws = 10_000
        xs = PGRID.nodes()
        draws = np.stack([sample_grf(self.spec, PGRID, s).values
                          for s in range(n_draws)])
        coeffs = np.fft.rfft(draws, axis=1) / PGRID.n
        for k in range(1, 9):
            # |c_k|^2 collects half of both the cos and sin mode energy
            var_k = 2 * np.mean(np.abs(coeffs[:, k]) ** 2)
            expected = 2 * lam[k - 1]
            assert var_k == pytest.approx(expected, rel=0.10)

    def test_cutoff_rejected_beyond_nyquist(self):
        with pytest.raises(ValueError, match="Nyquist"):
            sample_grf(GRFSpec(n_modes=300), PGRID, 0)


class TestBurgersIC:
    w0, w1 = burgers_field_pair(PGRID)

    def test_degenerate_coefficient(self):
        p = IntrinsicParams("burgers", 0.0, 0.0)
        g = burgers_ic(p, self.w0, self.w1)
        x = PGRID.nodes()
        assert np.allclose(g(x), self.w1(x))

    def test_coefficients_at_limit(self):
        p = IntrinsicParams("burgers", 0.9, 0.0)
        g = burgers_ic(p, self.w0, self.w1)
        x = PGRID.nodes()
        expected = 0.9 * self.w0(x) + np.sqrt(0.19) * self.w1(x)
        assert np.allclose(g(x), expected)

    def test_norm_identity_for_orthogonal_pair(self):
        # synthetic orthogonal fields: single distinct Fourier modes
        spec = GRFSpec(n_modes=8)
        z = np.zeros(8)
        xi0, xi1 = z.copy(), z.copy()
        xi0[1], xi1[4] = 1.0, 1.0
        from aenet.pde_data import GRFDraw

        w0 = GRFDraw(spec, xi0, z)
        w1 = GRFDraw(spec, xi1, z)
        rule = make_quadrature(PGRID, "midpoint")
        n0 = weighted_norm(discretize(w0, PGRID), rule)
        n1 = weighted_norm(discretize(w1, PGRID), rule)
        for a, h in [(0.5, 0.2), (-0.9, 0.8)]:
            g = burgers_ic(IntrinsicParams("burgers", a, h), w0, w1)
            ng = weighted_norm(discretize(g, PGRID), rule)
            assert ng ** 2 == pytest.approx(a ** 2 * n0 ** 2 + (1 - a ** 2) * n1 ** 2,
                                            rel=1e-10)

    def test_shift_is_exact_translation(self):
        p = IntrinsicParams("burgers", 0.5, 0.25)
        g = burgers_ic(p, self.w0, self.w1)
        g0 = burgers_ic(IntrinsicParams("burgers", 0.5, 0.0), self.w0, self.w1)
        x = PGRID.nodes()
        assert np.allclose(g(x), g0(x - 0.25), atol=1e-12)


class TestSolveBurgers:
    def test_zero_ic(self):
        u = solve_burgers(DiscreteFunction(PGRID, np.zeros(512)), dt=1e-2)
        assert np.allclose(u.values, 0.0)

    def test_energy_decay(self):
        rule = make_quadrature(PGRID, "midpoint")
        for seed in range(5):
            g = sample_grf(GRFSpec(n_modes=128), PGRID, seed)
            u = solve_burgers(g, dt=1e-3)
            assert weighted_norm(u, rule) <= weighted_norm(g, rule)

    @pytest.mark.slow
    def test_self_convergence(self):
        g = sample_grf(GRFSpec(n_modes=256), PGRID, 3)
        rule = make_quadrature(PGRID, "midpoint")
        u1 = solve_burgers(g, dt=1e-3)
        u2 = solve_burgers(g, dt=5e-4)
        diff = DiscreteFunction(PGRID, u1.values - u2.values)
        assert weighted_norm(diff, rule) < 1e-6


class TestKdVIC:
    def test_first_pulse_peak(self):
        g = kdv_ic(IntrinsicParams("kdv", 6.0, 0.0))
        assert g(1.0) == pytest.approx(18.0 + 18.0 / np.cosh(18.0) ** 2)

    def test_second_pulse_peak(self):
        for a, h in [(6, 0), (18, 3), (10, 1.5)]:
            g = kdv_ic(IntrinsicParams("kdv", a, h))
            x = 2.0 + h
            assert g(x) >= 18.0
            assert g(x) == pytest.approx(18.0 + (a ** 2 / 2) / np.cosh(a / 2 * (x - 1)) ** 2)

    def test_tails_decay(self):
        # far from both pulse centers (1 and 2) the profile is negligible
        for a in (6.0, 12.0, 18.0):
            g = kdv_ic(IntrinsicParams("kdv", a, 0.0))
            assert g(5.0) < 1e-3


class TestSolveKdV:
    def test_zero_ic(self):
        u = solve_kdv(DiscreteFunction(KGRID, np.zeros(512)), dt=1e-4)
        assert np.allclose(u.values, 0.0)

    def test_mass_conservation(self):
        for seed, (a, h) in enumerate([(6.0, 0.0), (12.0, 1.5), (18.0, 3.0)]):
            g = discretize(kdv_ic(IntrinsicParams("kdv", a, h)), KGRID)
            u = solve_kdv(g, dt=1e-6)
            m0 = g.values.mean() * KGRID.length
            m1 = u.values.mean() * KGRID.length
            assert abs(m1 - m0) / abs(m0) < 1e-8

    def test_soliton_accuracy(self):
        # exact soliton of u_t = -u_xxx - u u_x: u = 12 k^2 sech^2(k(x-4k^2 t-x0))
        k, x0, T = 3.0, 3.0, 0.01
        ic = discretize(lambda x: 12 * k * k / np.cosh(k * (x - x0)) ** 2, KGRID)
        u = solve_kdv(ic, T=T, dt=1e-6)
        exact = 12 * k * k / np.cosh(k * (KGRID.nodes() - 4 * k * k * T - x0)) ** 2
        rule = make_quadrature(KGRID, "midpoint")
        err = weighted_norm(DiscreteFunction(KGRID, u.values - exact), rule)
        assert err < 1e-4

    @pytest.mark.slow
    def test_self_convergence_at_default_dt(self):
        g = discretize(kdv_ic(IntrinsicParams("kdv", 12.0, 1.0)), KGRID)
        rule = make_quadrature(KGRID, "midpoint")
        u1 = solve_kdv(g)  # default dt
        u2 = solve_kdv(g, dt=1.25e-7 / 2)
        diff = DiscreteFunction(KGRID, u1.values - u2.values)
        assert weighted_norm(diff, rule) < 1e-6


class TestNoise:
    def _tiny(self):
        train, _ = make_dataset("transport", 8, 2, seed=0)
        return train

    def test_sigma_zero_bit_exact(self):
        ds = self._tiny()
        noisy = add_noise(ds, 0.0, seed=5)
        assert np.array_equal(noisy.noisy_outputs, ds.clean_outputs)

    def test_variance(self):
        rng_ds = self._tiny()
        big = add_noise(rng_ds, 0.3, seed=1)
        # stack noise over many re-draws of a single sample row
        noise = np.concatenate([
            (add_noise(rng_ds, 0.3, seed=s).noisy_outputs - rng_ds.clean_outputs).ravel()
            for s in range(30)
        ])
        assert noise.var() == pytest.approx(0.09, rel=0.05)
        assert abs(noise.mean()) < 0.01

    def test_redraw_changes_noise_not_clean(self):
        ds = self._tiny()
        a = add_noise(ds, 0.1, seed=1)
        b = add_noise(ds, 0.1, seed=2)
        assert not np.array_equal(a.noisy_outputs, b.noisy_outputs)
        assert np.array_equal(a.clean_outputs, b.clean_outputs)

    def test_negative_sigma_rejected(self):
        with pytest.raises(ValueError):
            add_noise(self._tiny(), -0.1, seed=0)


class TestMakeDataset:
    def test_transport_protocol_shapes(self):
        train, test = make_dataset("transport", 20, 5, sigma=0.1, seed=3)
        assert train.inputs.shape == (20, 512)
        assert test.inputs.shape == (5, 512)
        assert len(train.params) == 20
        # training outputs carry noise, test outputs stay clean
        assert not np.array_equal(train.noisy_outputs, train.clean_outputs)
        assert np.array_equal(test.noisy_outputs, test.clean_outputs)

    def test_singleton(self):
        train, test = make_dataset("transport", 1, 0, seed=0)
        assert len(train) == 1
        assert len(test) == 0

    def test_seed_determinism(self):
        a, _ = make_dataset("transport", 6, 2, sigma=0.05, seed=9)
        b, _ = make_dataset("transport", 6, 2, sigma=0.05, seed=9)
        assert np.array_equal(a.inputs, b.inputs)
        assert np.array_equal(a.noisy_outputs, b.noisy_outputs)

    def test_params_within_boxes(self):
        train, _ = make_dataset("kdv", 12, 0, seed=1,
                                solver_opts={"dt": 1e-5})
        for p in train.params:
            assert 6 <= p.a <= 18
            assert 0 <= p.h <= 3

    def test_burgers_pipeline(self):
        train, test = make_dataset("burgers", 4, 2, seed=2,
                                   solver_opts={"dt": 1e-2})
        rule = make_quadrature(train.grid_out, "midpoint")
        for i in range(4):
            out_norm = weighted_norm(train.clean_output_function(i), rule)
            in_norm = weighted_norm(train.input_function(i), rule)
            assert out_norm <= in_norm  # viscous decay

    def test_round_trip_binary_and_csv(self, tmp_path):
        train, _ = make_dataset("transport", 5, 1, sigma=0.2, seed=4)
        bpath = tmp_path / "ds.npz"
        save_dataset(train, bpath)
        loaded = load_dataset(bpath)
        assert np.array_equal(loaded.inputs, train.inputs)
        assert np.array_equal(loaded.noisy_outputs, train.noisy_outputs)
        assert loaded.grid_in == train.grid_in
        assert loaded.params == train.params

        cdir = tmp_path / "ds_csv"
        save_dataset(train, cdir, fmt="csv")
        loaded_csv = load_dataset(cdir, fmt="csv")
        assert np.array_equal(loaded_csv.inputs, train.inputs)
        assert np.array_equal(loaded_csv.clean_outputs, train.clean_outputs)


class TestIntrinsicDimension:
    def test_transport_inputs_box_dimension(self):
        # 2000 two-bump inputs form a 2-parameter manifold in R^512
        train, _ = make_dataset("transport", 2000, 0, seed=0)
        scales = np.geomspace(0.3, 3.0, 10)
        est = box_counting_dimension(train.inputs, scales)
        assert 1.5 <= est <= 2.6
