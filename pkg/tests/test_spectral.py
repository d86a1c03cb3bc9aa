import json
import math

import numpy as np
import pytest
from scipy import integrate

from approxdft import spectral as sp
from approxdft.analysis import a1


class TestModel:
    def test_validation(self):
        with pytest.raises(ValueError):
            sp.HarmonicModel((1.0,), (0.0,), (0.0,))
        with pytest.raises(ValueError):
            sp.HarmonicModel((1.0, 1.0), (0.0, 0.0), (0.5, 0.4))
        with pytest.raises(ValueError):
            sp.HarmonicModel((1.0,), (), (0.5,))
        with pytest.raises(ValueError):
            sp.HarmonicModel(noise_sd=-1)

    def test_prime_coefficients(self):
        m = sp.HarmonicModel((2.0,), (math.pi / 2,), (1.0,))
        assert abs(m.a_prime[0]) < 1e-15 and abs(m.b_prime[0] + 2) < 1e-15

    def test_on_grid_sorts(self):
        m = sp.HarmonicModel.on_grid(64, [10, 3], [1.0, 2.0])
        assert m.amplitudes == (2.0, 1.0)
        assert m.frequencies[0] == pytest.approx(2 * math.pi * 3 / 64)


class TestSynthesis:
    def test_deterministic(self):
        m = sp.HarmonicModel(noise_sd=1.0)
        np.testing.assert_array_equal(sp.synthesize(m, 32, 5), sp.synthesize(m, 32, 5))
        assert not np.array_equal(sp.synthesize(m, 32, 5), sp.synthesize(m, 32, 6))

    def test_single_tone(self):
        m = sp.HarmonicModel((1.0,), (0.0,), (math.pi / 2,))
        np.testing.assert_allclose(sp.synthesize(m, 4), [1, 0, -1, 0], atol=1e-15)

    def test_trial_seeds_independent(self):
        s = sp.trial_seeds(1, 3)
        draws = [sp.make_rng(x).standard_normal() for x in s]
        assert len(set(draws)) == 3


class TestLeastSquares:
    def test_gram_orthogonal(self):
        n = 32
        c, s, d = sp.trig_gram(2 * math.pi * 3 / n, 2 * math.pi * 5 / n, n)
        assert max(abs(c), abs(s), abs(d)) < 1e-12
        c, s, d = sp.trig_gram(2 * math.pi * 3 / n, 2 * math.pi * 3 / n, n)
        assert c == pytest.approx(n / 2) and s == pytest.approx(n / 2) and abs(d) < 1e-12

    def test_noiseless_recovery(self):
        m = sp.HarmonicModel.on_grid(64, [5, 9], [1.5, 0.7], [0.3, -1.1])
        a, b = sp.ls_estimate(sp.synthesize(m, 64), m.frequencies)
        np.testing.assert_allclose(a, m.a_prime, atol=1e-12)
        np.testing.assert_allclose(b, m.b_prime, atol=1e-12)

    def test_off_grid_rejected(self):
        with pytest.raises(ValueError):
            sp.ls_estimate(np.zeros(16), [0.123])

    def test_noise_variance_mc(self):
        m = sp.HarmonicModel.on_grid(128, [10], [1.0], noise_sd=1.0)
        vals = []
        for s in sp.trial_seeds(7, 200):
            x = sp.synthesize(m, 128, s)
            a, b = sp.ls_estimate(x, m.frequencies)
            vals.append(sp.noise_variance_estimate(x, m.frequencies, a, b))
        assert 0.85 <= np.mean(vals) <= 1.15

    def test_noise_variance_too_short(self):
        with pytest.raises(ValueError):
            sp.noise_variance_estimate(np.zeros(4), [0.5, 1.0], [0, 0], [0, 0])


class TestPeriodogram:
    def test_matrix_vs_direct(self):
        x = np.random.default_rng(1).standard_normal(64)
        np.testing.assert_allclose(sp.exact_periodogram(x).ordinates,
                                   sp.exact_periodogram(x, method="direct").ordinates, atol=1e-10)

    def test_direct_any_length(self):
        x = np.random.default_rng(1).standard_normal(30)
        pr = sp.exact_periodogram(x, method="direct")
        np.testing.assert_allclose(pr.ordinates, 2 / 30 * np.abs(np.fft.fft(x)[:16]) ** 2)
        with pytest.raises(ValueError):
            sp.exact_periodogram(x)

    def test_single_tone(self):
        n = 64
        x = np.cos(2 * np.pi * 8 * np.arange(n) / n)
        pr = sp.exact_periodogram(x)
        assert pr.ordinates[8] == pytest.approx(n / 2)
        assert np.all(np.delete(pr.ordinates, 8) < 1e-20)

    def test_interior_and_kind(self):
        pr = sp.approx_periodogram(np.ones(16), 4)
        assert len(pr.interior) == 7 and pr.kind == "approximate(4)"
        assert sp.exact_periodogram(np.ones(16)).kind == "exact"

    def test_conjugate_symmetry_full_spectrum(self):
        x = np.random.default_rng(2).standard_normal(32)
        full = np.abs(np.fft.fft(x)) ** 2
        pr = sp.exact_periodogram(x)
        np.testing.assert_allclose(pr.ordinates[1:16], 2 / 32 * full[31:16:-1])

    def test_gain(self):
        assert sp.periodogram_gain(4, 2) == 1
        assert sp.periodogram_gain(16, 8) == pytest.approx(a1(8) ** 4)


class TestTheory:
    def test_fejer_peak_and_zeros(self):
        assert sp.fejer_kernel(0.0, 16) == pytest.approx(16 / (2 * math.pi))
        assert sp.fejer_kernel(2 * math.pi, 16) == pytest.approx(16 / (2 * math.pi))
        assert abs(sp.fejer_kernel(2 * math.pi * 3 / 16, 16)) < 1e-28

    def test_fejer_integral(self):
        th = np.linspace(-math.pi, math.pi, 200001)
        assert integrate.simpson(sp.fejer_kernel(th, 32), x=th) == pytest.approx(1, abs=1e-8)

    def test_expected_noise_only(self):
        m = sp.HarmonicModel(noise_sd=1.5)
        assert sp.expected_periodogram(m, 0.7, 64) == pytest.approx(2 * 1.5**2)

    def test_expected_tone_bin(self):
        n = 64
        m = sp.HarmonicModel.on_grid(n, [8], [1.0], noise_sd=1.0)
        w = 2 * math.pi * 8 / n
        assert sp.expected_periodogram(m, w, n) == pytest.approx(2 + n / 2)

    def test_expected_mc(self):
        n = 64
        m = sp.HarmonicModel.on_grid(n, [8], [1.0], noise_sd=1.0)
        acc = np.zeros(n // 2 + 1)
        for s in sp.trial_seeds(3, 500):
            acc += sp.exact_periodogram(sp.synthesize(m, n, s)).ordinates
        acc /= 500
        w = 2 * np.pi * np.arange(1, n // 2) / n
        np.testing.assert_allclose(acc[1:n // 2], sp.expected_periodogram(m, w, n), rtol=0.15)
        assert acc[8] == pytest.approx(2 + n / 2, rel=0.05)

    def test_covariance(self):
        n = 64
        w = 2 * math.pi * 5 / n
        assert sp.periodogram_variance(w, 1.0, 0.0, n) == pytest.approx(4)
        assert sp.periodogram_variance(0.0, 1.0, 0.0, n) == pytest.approx(8)
        assert abs(sp.periodogram_covariance(w, 2 * math.pi * 7 / n, 1.0, 0.0, n)) < 1e-12


class TestFisher:
    def test_edges(self):
        assert sp.fisher_pvalue(0.0, 10) == 1 and sp.fisher_pvalue(1.0, 10) == 0
        with pytest.raises(ValueError):
            sp.fisher_pvalue(0.5, 1)

    def test_two_ordinates(self):
        # g = max(U, 1-U) with U uniform, so P[g > z] = 2(1 - z) for z >= 1/2
        assert sp.fisher_pvalue(0.7, 2) == pytest.approx(0.6)

    def test_monotone_and_first_term(self):
        zs = np.linspace(0.01, 0.99, 60)
        p = [sp.fisher_pvalue(z, 63) for z in zs]
        assert all(b <= a for a, b in zip(p, p[1:]))
        for z in zs:
            assert sp.fisher_pvalue_first_term(z, 63) >= sp.fisher_pvalue(z, 63) - 1e-15

    def test_g(self):
        r = sp.fisher_g([1.0, 3.0, 1.0, 1.0])
        assert r.g == 0.5 and r.index == 1 and r.count == 4
        with pytest.raises(ValueError):
            sp.fisher_g([0.0, 0.0])
        with pytest.raises(ValueError):
            sp.fisher_g([1.0, -1.0])


class TestDetection:
    def _pr(self, alpha=None, seed=11):
        m = sp.HarmonicModel.on_grid(256, [20, 45], [math.sqrt(200)] * 2, noise_sd=1.0)
        x = sp.synthesize(m, 256, seed)
        return sp.exact_periodogram(x) if alpha is None else sp.approx_periodogram(x, alpha)

    def test_two_tones_exact(self):
        r = sp.whittle_detect(self._pr(), 0.01, seed=11)
        assert {20, 45} <= set(r.bins)
        a = {p.bin: math.hypot(p.a_hat, p.b_hat) for p in r.peaks}
        assert a[20] == pytest.approx(math.sqrt(200), rel=0.05)
        assert 0.7 < r.sigma_hat_sq < 1.3

    def test_two_tones_approx(self):
        r = sp.whittle_detect(self._pr(8), 0.01)
        assert {20, 45} <= set(r.bins)

    def test_noise_only_usually_empty(self):
        hits = 0
        for s in range(50):
            x = sp.synthesize(sp.HarmonicModel(noise_sd=1.0), 128, s)
            hits += sp.whittle_detect(sp.exact_periodogram(x), 0.01).k_hat > 0
        assert hits <= 4

    def test_report_json(self):
        r = sp.whittle_detect(self._pr(), 0.01, seed=11)
        d = json.loads(r.to_json())
        assert d["exact"] and d["k_hat"] == r.k_hat and d["seed"] == 11
        assert set(d["peaks"][0]) == {"bin", "freq_rad", "g", "p_value", "a_hat", "b_hat"}

    def test_bad_zeta(self):
        with pytest.raises(ValueError):
            sp.whittle_detect(self._pr(), 1.5)


class TestLoad:
    def test_json(self, tmp_path):
        p = tmp_path / "x.json"
        p.write_text("[1, 2.5, -3]")
        np.testing.assert_array_equal(sp.load_samples(p), [1, 2.5, -3])

    def test_csv_header(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("x\n1\n2\n\n3\n")
        np.testing.assert_array_equal(sp.load_samples(p), [1, 2, 3])

    def test_csv_bad_line(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1\nfoo\n")
        with pytest.raises(ValueError, match=":2:"):
            sp.load_samples(p)

    def test_non_finite(self, tmp_path):
        p = tmp_path / "x.csv"
        p.write_text("1\nnan\n")
        with pytest.raises(ValueError):
            sp.load_samples(p)


class TestApproximateScaling:
    n = 128

    @pytest.mark.parametrize("alpha", [8, 16])
    def test_noise_mean_and_variance(self, alpha):
        g = sp.periodogram_gain(self.n, alpha)
        noise = sp.HarmonicModel(noise_sd=1.0)
        p = np.concatenate([
            sp.approx_periodogram(sp.synthesize(noise, self.n, s), alpha).interior
            for s in sp.trial_seeds(5, 300)
        ])
        assert p.mean() / (2 * g) == pytest.approx(1, abs=0.1)
        assert p.var() / (4 * g * g) == pytest.approx(1, abs=0.1)

    @pytest.mark.parametrize("alpha", [8, 16])
    def test_tone_ordinates(self, alpha):
        g = sp.periodogram_gain(self.n, alpha)
        t = np.arange(self.n)
        for b in range(1, self.n // 2):
            x = np.cos(2 * np.pi * b * t / self.n)
            ratio = sp.approx_periodogram(x, alpha).ordinates[b] / (self.n / 2) / g
            assert 0.9 <= ratio <= 1.1
