import cmath
import math

import numpy as np
import pytest

import randrefine as rr
from randrefine._compat import trapezoid


def single_atom_term(l, m, ghat, x, n):
    """Hand-expanded path average for a one-atom measure:
    exp(i x sum_{k<=n} m/l^k) * ghat(x / l^n)."""
    phase = sum(m / l ** k for k in range(1, n + 1))
    return cmath.exp(1j * x * phase) * ghat(x / l ** n)


class TestSeriesTerm:
    def test_single_atom_closed_form(self):
        m = rr.build_measure([(2, 1, 1.0)])
        g = rr.gaussian(0, 1) - rr.gaussian(1, 1)
        for n in (1, 2, 5, 9):
            for x in (0.3, 1.0, 2.7, -4.0):
                expected = single_atom_term(2.0, 1.0, g.fourier, x, n)
                assert rr.series_term(m, g, x, n) == pytest.approx(expected, abs=1e-13)

    def test_zero_frequency_vanishes_for_admissible_g(self):
        m = rr.build_measure([(2, 0, 0.5), (2, 1, 0.5)])
        g = rr.indicator(0, 1) - rr.indicator(1, 2)
        assert abs(rr.series_term(m, g, 0.0, 3)) <= 1e-14

    def test_two_paths_hand_expansion(self):
        # depth 1, two atoms: 0.5*ghat(x/2) + 0.5*exp(ix/2)*ghat(x/2)
        m = rr.build_measure([(2, 0, 0.5), (2, 1, 0.5)])
        g = rr.indicator(0, 1) - rr.indicator(1, 2)
        x = math.pi
        expected = 0.5 * g.fourier(x / 2) + 0.5 * cmath.exp(1j * x / 2) * g.fourier(x / 2)
        assert rr.series_term(m, g, x, 1) == pytest.approx(expected, abs=1e-14)

    def test_state_walk_matches_brute_paths(self):
        # mixed scales: compare the merged state walk against a literal
        # walk over atom**n paths
        import itertools
        m = rr.build_measure([(2, 1, 0.4), (0.5, -1, 0.6)])
        g = rr.gaussian(0, 1) - rr.gaussian(2, 1)
        x, n = 1.7, 5
        brute = 0j
        for path in itertools.product(m.atoms, repeat=n):
            prod, phase, w = 1.0, 0.0, 1.0
            for l, mm, p in path:
                prod *= l
                phase += mm / prod
                w *= p
            brute += w * cmath.exp(1j * x * phase) * g.fourier(x / prod)
        assert rr.series_term(m, g, x, n) == pytest.approx(brute, abs=1e-12)

    def test_monte_carlo_agrees_with_exact(self):
        m = rr.build_measure([(2, 0, 0.5), (2, 1, 0.5)])
        g = rr.indicator(0, 1) - rr.indicator(1, 2)
        exact = rr.series_term(m, g, 3.14, 6)
        est, stderr = rr.series_term_mc(m, g, 3.14, 6, 200_000, seed=5)
        assert abs(est - exact) <= 4 * stderr + 1e-4


class TestSumSeries:
    def test_telescopes_to_solution_transform(self, contractive_pair):
        measure, f, g = contractive_pair
        for x in (0.3, 1.0, 2.7):
            total, report = rr.sum_series(measure, g, x)
            assert report.converged
            expected = f.fourier(x) - g.fourier(x)
            assert total == pytest.approx(expected, abs=1e-12)

    def test_zero_frequency_sum_is_zero(self, contractive_pair):
        measure, _, g = contractive_pair
        total, _ = rr.sum_series(measure, g, 0.0)
        assert abs(total) <= 1e-13

    def test_single_atom_partial_sums_match_closed_form(self):
        m = rr.build_measure([(2, 1, 1.0)])
        g = rr.gaussian(0, 1) - rr.gaussian(1, 1)
        x = 1.0
        total, report = rr.sum_series(m, g, x)
        manual = sum(single_atom_term(2.0, 1.0, g.fourier, x, n)
                     for n in range(1, report.terms_used + 1))
        assert total == pytest.approx(manual, abs=1e-13)

    def test_critical_regime_refused(self):
        m = rr.build_measure([(-1, 0, 0.5), (1, 0, 0.5)])
        with pytest.raises(rr.CriticalRegime):
            rr.sum_series(m, rr.triangle(0, 1) - rr.triangle(1, 1), 1.0)

    def test_non_convergence_reported_not_raised(self, expansive_pair):
        measure, _, g = expansive_pair
        _, report = rr.sum_series_grid(measure, g, [50.0], n_max=4)
        assert not report.converged
        assert report.terms_used == 4

    def test_monte_carlo_grid_close_to_exact(self, expansive_pair):
        measure, _, g = expansive_pair
        xs = np.linspace(-6, 6, 13)
        exact, _ = rr.sum_series_grid(measure, g, xs, eps=1e-9, n_max=40)
        mc, _ = rr.sum_series_grid(
            measure, g, xs,
            strategy=rr.MonteCarloStrategy(sample_count=20_000, seed=11),
            eps=1e-9, n_max=25,
        )
        assert np.max(np.abs(exact - mc)) < 0.03


class TestForwardCharfnProduct:
    def test_matches_uniform_charfn(self):
        m = rr.build_measure([(2, 0, 0.5), (2, 1, 0.5)])
        xs = np.array([-7.0, -1.0, 0.5, 2.0, 19.0])
        vals = rr.forward_charfn_product(m, xs)
        oracle = (np.exp(1j * xs) - 1.0) / (1j * xs)
        assert np.allclose(vals, oracle, atol=1e-14)

    def test_against_monte_carlo(self):
        m = rr.build_measure([(3, 1, 0.5), (3, -1, 0.25), (3, 0, 0.25)])
        xs = np.array([0.7, 4.0])
        exact = rr.forward_charfn_product(m, xs)
        est = rr.estimate_charfn(m, xs, 200_000, rng_seed=8)
        assert np.all(np.abs(exact - est.charfn_values) <= 4 * est.charfn_stderr + 1e-3)

    def test_mixed_scales_refused(self):
        m = rr.build_measure([(2, 1, 0.5), (4, 1, 0.5)])
        with pytest.raises(rr.EnumerationTooLarge):
            rr.forward_charfn_product(m, [1.0])


class TestSolveSpectrum:
    def test_contractive_manufactured(self, contractive_pair):
        measure, f, g = contractive_pair
        xs = rr.symmetric_grid(40.0, 513)
        spec = rr.solve_spectrum(measure, g, 0.0, xs)
        assert spec.truncation.converged
        assert np.max(np.abs(spec.values - f.fourier(xs))) <= 1e-10

    def test_contractive_mass_zero_at_origin(self, contractive_pair):
        measure, _, g = contractive_pair
        spec = rr.solve_spectrum(measure, g, 0.0, rr.symmetric_grid(10.0, 33))
        assert abs(spec.value_at(0.0)) <= 1e-13

    def test_contractive_nonzero_mass_refused(self, contractive_pair):
        measure, _, g = contractive_pair
        with pytest.raises(rr.MassMustBeZero):
            rr.solve_spectrum(measure, g, 1.0, rr.symmetric_grid(10.0, 33))

    def test_nonzero_mean_forcing_refused(self):
        m = rr.build_measure([(0.5, 1, 1.0)])
        with pytest.raises(rr.NonzeroMeanInhomogeneity):
            rr.solve_spectrum(m, rr.indicator(0, 1), 0.0, rr.symmetric_grid(5.0, 17))

    def test_critical_refused(self):
        m = rr.build_measure([(-1, 0, 0.5), (1, 0, 0.5)])
        g = rr.triangle(1, 1) - rr.triangle(-1, 1)
        with pytest.raises(rr.CriticalRegime):
            rr.solve_spectrum(m, g, 0.0, rr.symmetric_grid(5.0, 17))

    def test_expansive_zero_shift_route(self):
        # one expanding atom with no shift: fhat = mass + series + ghat
        measure = rr.build_measure([(2, 0, 1.0)])
        f = rr.gaussian(0, 1)
        g = rr.manufacture_inhomogeneity(measure, f)
        xs = rr.symmetric_grid(30.0, 301)
        spec = rr.solve_spectrum(measure, g, f.mass(), xs)
        assert np.max(np.abs(spec.values - f.fourier(xs))) <= 1e-9

    def test_expansive_nondegenerate_route(self, expansive_pair):
        measure, f, g = expansive_pair
        xs = rr.symmetric_grid(30.0, 601)
        spec = rr.solve_spectrum(measure, g, 2.0, xs)
        assert np.max(np.abs(spec.values - f.fourier(xs))) <= 1e-10

    def test_expansive_value_at_zero_is_mass(self, expansive_pair):
        measure, _, g = expansive_pair
        spec = rr.solve_spectrum(measure, g, 2.0, rr.symmetric_grid(10.0, 65))
        assert spec.value_at(0.0) == pytest.approx(2.0, abs=1e-12)

    def test_shared_fixed_point_needs_override(self):
        # single atom (2, -1): every map fixes -1, the forward limit is the
        # constant -1, and the sufficient convergence condition fails
        measure = rr.build_measure([(2, -1, 1.0)])
        f = rr.gaussian(0, 1) - rr.gaussian(3, 1)
        g = rr.manufacture_inhomogeneity(measure, f)
        xs = rr.symmetric_grid(20.0, 257)
        with pytest.raises(rr.RegimeMismatch):
            rr.solve_spectrum(measure, g, 0.0, xs)
        spec = rr.solve_spectrum(measure, g, 0.0, xs, allow_unverified=True)
        assert np.max(np.abs(spec.values - f.fourier(xs))) <= 1e-10

    def test_monte_carlo_strategy_close(self, expansive_pair):
        measure, f, g = expansive_pair
        xs = rr.symmetric_grid(8.0, 33)
        spec = rr.solve_spectrum(
            measure, g, 2.0, xs,
            strategy=rr.MonteCarloStrategy(sample_count=20_000, seed=3),
            n_max=25,
        )
        assert np.max(np.abs(spec.values - f.fourier(xs))) < 0.05

    def test_hermitian_symmetry(self, contractive_pair):
        measure, _, g = contractive_pair
        xs = rr.symmetric_grid(20.0, 129)
        spec = rr.solve_spectrum(measure, g, 0.0, xs)
        assert np.allclose(spec.values, np.conj(spec.values[::-1]), atol=1e-15)

    def test_unique_under_solver_settings(self, contractive_pair):
        # two independent runs with different truncation settings agree
        measure, _, g = contractive_pair
        xs = rr.symmetric_grid(25.0, 257)
        a = rr.solve_spectrum(measure, g, 0.0, xs, eps=1e-8, n_max=40)
        b = rr.solve_spectrum(measure, g, 0.0, xs, eps=1e-12, n_max=60)
        assert np.max(np.abs(a.values - b.values)) <= 1e-7


class TestInvertSpectrum:
    def test_gaussian_round_trip(self):
        f = rr.gaussian(0, 1)
        xs = np.linspace(-40, 40, 4096)
        spec = rr.Spectrum(xs, f.fourier(xs), f.mass(), rr.TruncationReport(0, 0, True))
        ts = np.linspace(-8, 8, 1601)
        rec = rr.invert_spectrum(spec, ts)
        assert np.max(np.abs(rec.values - f(ts))) <= 1e-6

    def test_zero_spectrum_gives_zero(self):
        xs = np.linspace(-10, 10, 101)
        spec = rr.Spectrum(xs, np.zeros(101, complex), 0.0,
                           rr.TruncationReport(0, 0, True))
        rec = rr.invert_spectrum(spec, np.linspace(-1, 1, 21))
        assert np.all(rec.values == 0.0)

    def test_step_pair_round_trip_with_override(self):
        # 1/x spectrum decay keeps the edge above the leakage gate at this
        # window; overriding reproduces the known Gibbs-limited accuracy
        f = rr.indicator(0, 1) - rr.indicator(1, 2)
        xs = np.linspace(-200, 200, 8192)
        spec = rr.Spectrum(xs, f.fourier(xs), 0.0, rr.TruncationReport(0, 0, True))
        ts = np.linspace(-2.0, 4.0, 6001)
        with pytest.raises(rr.SpectralLeakage):
            rr.invert_spectrum(spec, ts)
        rec = rr.invert_spectrum(spec, ts, check_leakage=False)
        l1 = trapezoid(np.abs(rec.values - f(ts)), ts)
        # frozen from a grid-converged run; scales like log(width)/width of
        # the frequency window (4 unit jumps)
        assert l1 == pytest.approx(0.0515, rel=0.05)

    def test_leakage_gate(self):
        f = rr.gaussian(0, 1)
        xs = np.linspace(-2, 2, 41)
        spec = rr.Spectrum(xs, f.fourier(xs), f.mass(), rr.TruncationReport(0, 0, True))
        with pytest.raises(rr.SpectralLeakage):
            rr.invert_spectrum(spec, np.linspace(-1, 1, 11))

    def test_asymmetric_grid_rejected(self):
        xs = np.linspace(0, 10, 11)
        spec = rr.Spectrum(xs, np.ones(11, complex), 0.0,
                           rr.TruncationReport(0, 0, True))
        with pytest.raises(ValueError):
            rr.invert_spectrum(spec, np.linspace(-1, 1, 5))

    def test_recurrence_matches_direct(self):
        f = rr.gaussian(0.5, 1.2) - 0.5 * rr.triangle(-1, 2)
        xs = np.linspace(-30, 30, 2048)
        spec = rr.Spectrum(xs, f.fourier(xs), f.mass(), rr.TruncationReport(0, 0, True))
        ts = np.linspace(-6, 6, 1200)
        direct = rr.invert_spectrum(spec, ts, method="direct")
        fast = rr.invert_spectrum(spec, ts, method="recurrence")
        assert np.max(np.abs(direct.values - fast.values)) <= 1e-9

    def test_recurrence_accurate_at_scale(self):
        # at grids where the phase recurrence is the auto choice, spot-check
        # it against an extended-precision evaluation of the same sum
        f = rr.indicator(0, 1) + rr.indicator(2, 3)
        xs = rr.symmetric_grid(2560.0, 32769)
        spec = rr.Spectrum(xs, f.fourier(xs), f.mass(), rr.TruncationReport(0, 0, True))
        ts = np.linspace(-2.0, 5.0, 28001)
        fast = rr.invert_spectrum(spec, ts, method="recurrence")

        dx = np.longdouble(xs[1] - xs[0])
        weights = np.full(len(xs), dx, dtype=np.longdouble)
        weights[0] = weights[-1] = dx / 2
        vw = spec.values.astype(np.clongdouble) * weights / (2 * np.longdouble(np.pi))
        xl = xs.astype(np.longdouble)
        for idx in (0, 7011, 14000, 20003, 28000):
            ref = complex((np.exp(-1j * np.longdouble(ts[idx]) * xl) * vw).sum())
            assert abs(fast.values[idx] - ref) <= 1e-10


class TestResidualEquivalence:
    def test_time_and_fourier_residuals_vanish_together(self, contractive_pair):
        measure, f, g = contractive_pair
        xs = [0.3, 1.0, 2.7, 5.0]
        assert rr.residual_time(measure, f, g).sup_residual <= 1e-10
        assert rr.residual_fourier(measure, f, g, xs) <= 1e-8
        broken = f + rr.gaussian(5, 1)
        assert rr.residual_time(measure, broken, g).sup_residual > 1e-3
        assert rr.residual_fourier(measure, broken, g, xs) > 1e-3
