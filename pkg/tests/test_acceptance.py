"""Acceptance suite: one PASS/FAIL line per criterion, printed even under capture."""

import math
import time

import numpy as np
import pytest

from approxdft import analysis, beamforming, spectral, transform
from approxdft.transform import (
    F4,
    apply,
    apply_inverse,
    build_approx_dft,
    build_exact_dft,
    compile_factored,
    count_complexity,
    determinant_closed_form,
    direct_dft,
    lu_determinant,
)

ALPHAS = (1, 2, 4, 8, 16)
LENGTHS_256 = (4, 8, 16, 32, 64, 128, 256)

F8_ALPHA2_A = (1 + 1j) / 2


def report(capsys, name, ok, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} {name}: {detail}")
    assert ok, detail


def test_base_case_identity(capsys):
    ok = all(np.array_equal(build_approx_dft(4, a), F4) for a in ALPHAS)
    report(capsys, "base-case identity", ok, f"F~_4(alpha) == F_4 for alpha in {ALPHAS}")


def test_n8_alpha2_matrix(capsys):
    a, b = F8_ALPHA2_A, np.conj(F8_ALPHA2_A)
    j = 1j
    expected = np.array([
        [1, 1, 1, 1, 1, 1, 1, 1],
        [1, b, -j, -a, -1, -b, j, a],
        [1, -j, -1, j, 1, -j, -1, j],
        [1, -a, j, b, -1, a, -j, -b],
        [1, -1, 1, -1, 1, -1, 1, -1],
        [1, -b, -j, a, -1, b, j, -a],
        [1, j, -1, -j, 1, j, -1, -j],
        [1, a, j, -b, -1, -a, -j, b],
    ])
    got = build_approx_dft(8, 2)
    report(capsys, "N=8 alpha=2 matrix", np.array_equal(got, expected),
           f"max |diff| = {np.abs(got - expected).max():.3g}")


def test_dense_factored_equivalence(capsys):
    t0 = time.perf_counter()
    worst = 0.0
    for n in LENGTHS_256:
        for a in ALPHAS:
            cols = apply(compile_factored(n, a), np.eye(n)).T
            worst = max(worst, np.abs(cols - build_approx_dft(n, a)).max())
    elapsed = time.perf_counter() - t0
    report(capsys, "dense/factored equivalence", worst < 1e-12 and elapsed < 30,
           f"max |diff| = {worst:.3g} over N<=256 x alpha in {ALPHAS}, {elapsed:.2f} s")


def test_exact_oracle(capsys):
    worst = max(np.abs(build_exact_dft(n) - direct_dft(n)).max() for n in LENGTHS_256)
    report(capsys, "exact-DFT oracle", worst < 1e-12, f"max |recursive - direct| = {worst:.3g}")


def test_perfect_reconstruction(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for n in LENGTHS_256:
        for a in ALPHAS:
            t = compile_factored(n, a)
            x = rng.standard_normal((100, n)) + 1j * rng.standard_normal((100, n))
            back = apply_inverse(t, apply(t, x))
            rel = np.linalg.norm(back - x, axis=1) / np.linalg.norm(x, axis=1)
            worst = max(worst, rel.max())
    report(capsys, "perfect reconstruction", worst < 1e-10,
           f"max relative error {worst:.3g} over 100 vectors per (N, alpha)")


def test_determinant(capsys):
    worst = 0.0
    for n in (8, 16, 32):
        for a in (None, *(2**m for m in range(11))):
            m = build_exact_dft(n) if a is None else build_approx_dft(n, a)
            closed = determinant_closed_form(n, a)
            worst = max(worst, closed.relative_difference(lu_determinant(m)))
    d4 = determinant_closed_form(4).value
    ok = worst < 1e-8 and d4 == 16j
    report(capsys, "determinant", ok, f"max relative gap {worst:.3g}; det(F_4) = {d4}")


def test_bound_suite(capsys):
    failed = []
    for k in range(3, 11):
        n = 2**k
        for m in range(9):
            r = analysis.verify_bounds(n, 2**m)
            failed += [(n, 2**m, c.name) for c in r.checks if not c.holds]
    report(capsys, "bound suite", not failed,
           f"N<=1024, alpha<=256; violations: {failed[:5] if failed else 'none'}")


def test_convergence(capsys):
    bad = []
    for n in (8, 16, 32, 64):
        ex = build_exact_dft(n)
        vals = [np.linalg.norm(ex - build_approx_dft(n, 2**m)) for m in range(1, 11)]
        bad += [(n, 2 ** (i + 1), 2 ** (i + 2)) for i, (p, q) in enumerate(zip(vals, vals[1:])) if not q < p]
    report(capsys, "strict convergence", not bad,
           "strictly decreasing" if not bad else f"ties or increases at (N, alpha, next alpha) {bad}")


def test_orthogonality_deviation(capsys):
    d8 = analysis.orthogonality_deviation(build_approx_dft(8, 2))
    d16 = analysis.orthogonality_deviation(build_approx_dft(16, 2))
    ok8 = abs(d8 / 3.85e-2 - 1) <= 0.02
    ok16 = abs(d16 / 1.48e-2 - 1) <= 0.02
    table = analysis.PUBLISHED_TABLES[2]
    col_bad = []
    for n, (_, ref) in table.items():
        got = analysis.orthogonality_deviation(build_approx_dft(n, 2))
        if not (got == ref == 0 or (ref and abs(got / ref - 1) <= 0.05)):
            col_bad.append((n, round(got, 5), ref))
    report(capsys, "orthogonality deviation", ok8 and ok16 and not col_bad,
           f"delta8 = {d8:.5g} (table 3.85e-2), delta16 = {d16:.5g} (table 1.48e-2); "
           f"alpha=2 column mismatches {col_bad}")


def test_total_error_energy(capsys):
    worst = 0.0
    ratios = {}
    for a in (1, 2, 4, 8, 16):
        for k in range(2, 11):
            n = 2**k
            r = analysis.compute_metrics(n, a)
            worst = max(worst, r.energy_quadrature_gap)
            if a == 2 and r.energy_ratio is not None:
                ratios[n] = round(r.energy_ratio, 3)
    report(capsys, "total error energy (Parseval)", worst < 1e-6,
           f"max quadrature gap {worst:.3g}; ratio to alpha=2 table (reported only): {ratios}")


def test_fourier_coefficients(capsys):
    e1 = abs(analysis.a1(1) - 2 * math.sqrt(3) / math.pi)
    eq = max(abs(analysis.fourier_coeff_b(n, a) - analysis.fourier_coeff_quadrature(n, a))
             for n in (1, 3, 5) for a in (1, 2, 4, 8))
    sandwich = all(1 - 2 / (math.pi * 2**m) <= analysis.a1(2**m) <= 1 + 2 / (math.pi * 2**m)
                   for m in range(13))
    report(capsys, "Fourier coefficients", e1 < 1e-12 and eq < 1e-6 and sandwich,
           f"|a1(1) - 2sqrt3/pi| = {e1:.2g}, closed vs quadrature {eq:.2g}, sandwich {sandwich}")


def test_complexity(capsys):
    c = count_complexity(8, 2)
    ok = (c.complex_additions, c.real_additions, c.bit_shifts) == (24, 52, 4)
    ac = all(count_complexity(2**k, a).complex_additions == 2**k * k for a in (1, 2) for k in range(2, 11))
    report(capsys, "complexity counts", ok and ac,
           f"(8, 2) -> {c.complex_additions} complex adds, {c.real_additions} real adds, "
           f"{c.bit_shifts} shifts; A_c = N log2 N: {ac}")


def _grid_deviation_beams(n):
    d = beamforming.angle_deviation(build_exact_dft(n), build_approx_dft(n, 2), method="grid")
    hits = np.flatnonzero(d > 1e-3)
    return d, set(hits.tolist())


def test_beam_angles(capsys):
    target = np.array([0.0, 14.47, 30.0, 48.59, -90.0, -48.59, -30.0, -14.47])
    got = beamforming.beam_angles(build_approx_dft(8, 2)).angles_deg
    ok8 = bool(np.all(np.abs(got - target) <= 0.01))
    step = math.degrees(1e-3)
    listed = {16: {9, 11, 13}, 32: {12, 14}}
    parts, ok_rest = [], True
    for n, beams in listed.items():
        d, hits = _grid_deviation_beams(n)
        # the listed beam labels are matched as either 0-based or 1-based indices
        labels_ok = hits == beams or {h + 1 for h in hits} == beams
        vals_ok = bool(np.allclose(d[list(hits)], step, atol=5e-5)) if hits else False
        ok_rest &= labels_ok and vals_ok
        parts.append(f"N={n} deviating beams (0-based) {sorted(hits)}")
    report(capsys, "beam angles", ok8 and ok_rest,
           f"N=8 max gap {np.abs(got - target).max():.4f} deg; " + "; ".join(parts))


def test_periodogram_law(capsys):
    n, trials = 128, 200
    seeds = spectral.trial_seeds(7, trials)
    noise = spectral.HarmonicModel(noise_sd=1.0)
    xs = [spectral.synthesize(noise, n, s) for s in seeds]
    pooled = np.concatenate([spectral.exact_periodogram(x).interior for x in xs])
    mean, var = pooled.mean(), pooled.var(ddof=1)
    ok = abs(mean / 2 - 1) <= 0.1 and abs(var / 4 - 1) <= 0.1
    parts = [f"exact mean {mean:.3f} (2), var {var:.3f} (4)"]
    for a in (4, 8, 16):
        p = np.concatenate([spectral.approx_periodogram(x, a).interior for x in xs])
        ratio = p.mean() / (2 * spectral.periodogram_gain(n, a))
        ok &= abs(ratio - 1) <= 0.1
        parts.append(f"alpha={a} mean/gain-model {ratio:.3f}")
    report(capsys, "periodogram law", ok, "; ".join(parts))


def test_fisher_calibration(capsys):
    n, trials = 128, 2000
    t0 = time.perf_counter()
    noise = spectral.HarmonicModel(noise_sd=1.0)
    rejects = 0
    for s in spectral.trial_seeds(11, trials):
        pr = spectral.exact_periodogram(spectral.synthesize(noise, n, s))
        rejects += spectral.fisher_g(pr.interior).p_value < 0.05
    rate = rejects / trials
    elapsed = time.perf_counter() - t0
    report(capsys, "Fisher calibration", 0.035 <= rate <= 0.065 and elapsed < 60,
           f"rejection rate {rate:.4f} at zeta=0.05 over {trials} trials, {elapsed:.2f} s")


def test_detection_power(capsys):
    n, truth = 256, {20, 45}
    amp = math.sqrt(200)  # A^2/2 = 100 sigma^2, i.e. 20 dB
    model = spectral.HarmonicModel.on_grid(n, sorted(truth), [amp, amp], noise_sd=1.0)
    hit_exact = hit_approx = agree = 0
    for seed in range(100):
        x = spectral.synthesize(model, n, seed)
        re = spectral.whittle_detect(spectral.exact_periodogram(x), 0.01, seed)
        ra = spectral.whittle_detect(spectral.approx_periodogram(x, 8), 0.01, seed)
        hit_exact += truth <= set(re.bins)
        hit_approx += truth <= set(ra.bins)
        agree += set(re.bins) == set(ra.bins)
    ok = hit_exact >= 99 and hit_approx >= 99 and agree >= 99
    report(capsys, "detection power", ok,
           f"true bins found exact {hit_exact}/100, alpha=8 {hit_approx}/100; "
           f"identical bin sets {agree}/100")


def test_performance(capsys):
    transform._dense.cache_clear()
    transform.compile_factored.cache_clear()
    t = compile_factored(1024, 2)
    x = np.random.default_rng(0).standard_normal(1024)
    apply(t, x)
    runs = []
    for _ in range(50):
        t0 = time.perf_counter()
        apply(t, x)
        runs.append(time.perf_counter() - t0)
    per = float(np.median(runs))
    t0 = time.perf_counter()
    for k in range(2, 11):
        analysis.compute_metrics(2**k, 2)
    sweep = time.perf_counter() - t0
    report(capsys, "performance", per < 0.01 and sweep < 60,
           f"N=1024 apply {per * 1e3:.3f} ms; alpha=2 sweep N<=1024 {sweep:.2f} s")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-q"]))
