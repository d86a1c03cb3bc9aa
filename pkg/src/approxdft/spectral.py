"""Harmonic processes, exact and approximate periodograms, and peak detection.

Samples are indexed n = 0..N-1 throughout and the periodogram is
I = (2/N) |F_N x|^2 at the Fourier frequencies 2 pi i / N.
"""

from __future__ import annotations

import decimal
import json
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from approxdft.analysis import a1
from approxdft.transform import apply, check_alpha, check_length, compile_factored

__all__ = [
    "HarmonicModel",
    "make_rng",
    "trial_seeds",
    "synthesize",
    "trig_gram",
    "fourier_bins",
    "ls_estimate",
    "noise_variance_estimate",
    "PeriodogramResult",
    "exact_periodogram",
    "approx_periodogram",
    "periodogram_gain",
    "fejer_kernel",
    "expected_periodogram",
    "periodogram_covariance",
    "periodogram_variance",
    "fisher_pvalue",
    "fisher_pvalue_first_term",
    "FisherResult",
    "fisher_g",
    "Peak",
    "DetectionReport",
    "whittle_detect",
    "load_samples",
]


@dataclass(frozen=True)
class HarmonicModel:
    """x_n = sum_i A_i cos(w_i n + phi_i) + e_n with e_n ~ N(0, noise_sd^2)."""

    amplitudes: tuple[float, ...] = ()
    phases: tuple[float, ...] = ()
    frequencies: tuple[float, ...] = ()
    noise_sd: float = 0.0

    def __post_init__(self):
        for name in ("amplitudes", "phases", "frequencies"):
            object.__setattr__(self, name, tuple(float(v) for v in getattr(self, name)))
        k = len(self.amplitudes)
        if len(self.phases) != k or len(self.frequencies) != k:
            raise ValueError("amplitudes, phases and frequencies must have equal length")
        f = np.asarray(self.frequencies)
        if np.any(f <= 0) or np.any(f > np.pi):
            raise ValueError("frequencies must lie in (0, pi]")
        if np.any(np.diff(f) <= 0):
            raise ValueError("frequencies must be strictly increasing")
        if not np.all(np.isfinite(self.amplitudes + self.phases)):
            raise ValueError("amplitudes and phases must be finite")
        if not (math.isfinite(self.noise_sd) and self.noise_sd >= 0):
            raise ValueError("noise_sd must be finite and >= 0")

    @property
    def k(self) -> int:
        return len(self.amplitudes)

    @property
    def a_prime(self) -> np.ndarray:
        """A'_i = A_i cos(phi_i)."""
        return np.asarray(self.amplitudes) * np.cos(self.phases)

    @property
    def b_prime(self) -> np.ndarray:
        """B'_i = -A_i sin(phi_i)."""
        return -np.asarray(self.amplitudes) * np.sin(self.phases)

    @classmethod
    def on_grid(cls, n: int, bins: Sequence[int], amplitudes: Sequence[float],
                phases: Sequence[float] | None = None, noise_sd: float = 0.0) -> "HarmonicModel":
        """Model with tones at Fourier frequencies 2 pi p / n for p in ``bins``."""
        order = np.argsort(bins)
        bins = [int(bins[i]) for i in order]
        amplitudes = [amplitudes[i] for i in order]
        phases = [0.0] * len(bins) if phases is None else [phases[i] for i in order]
        return cls(tuple(amplitudes), tuple(phases), tuple(2 * np.pi * p / n for p in bins), noise_sd)

    def to_dict(self) -> dict:
        return {
            "amplitudes": list(self.amplitudes),
            "phases": list(self.phases),
            "frequencies": list(self.frequencies),
            "noise_sd": self.noise_sd,
        }


def make_rng(seed: int | np.random.SeedSequence | None) -> np.random.Generator:
    return np.random.default_rng(seed)


def trial_seeds(seed: int, count: int) -> list[np.random.SeedSequence]:
    """Independent child seeds for ``count`` Monte-Carlo trials."""
    return np.random.SeedSequence(seed).spawn(count)


def synthesize(model: HarmonicModel, n: int, seed=0) -> np.ndarray:
    """Draw N samples of the harmonic process; deterministic given ``seed``."""
    if n < 4:
        raise ValueError("need at least 4 samples")
    t = np.arange(n)
    x = np.zeros(n)
    for a, phi, w in zip(model.amplitudes, model.phases, model.frequencies):
        x += a * np.cos(w * t + phi)
    if model.noise_sd > 0:
        x += model.noise_sd * make_rng(seed).standard_normal(n)
    return x


def trig_gram(omega_i: float, omega_j: float, n: int) -> tuple[float, float, float]:
    """(c_ij, s_ij, d_ij): sums over t of cos*cos, sin*sin and cos*sin."""
    t = np.arange(n)
    ci, cj = np.cos(omega_i * t), np.cos(omega_j * t)
    si, sj = np.sin(omega_i * t), np.sin(omega_j * t)
    return float(ci @ cj), float(si @ sj), float(ci @ sj)


def fourier_bins(omegas, n: int, tol: float = 1e-9) -> np.ndarray:
    """Integer bins p with omega = 2 pi p / n; raises if any omega is off-grid."""
    p = np.asarray(omegas, dtype=float) * n / (2 * np.pi)
    bins = np.rint(p)
    if np.any(np.abs(p - bins) > tol):
        raise ValueError("least-squares estimates need Fourier frequencies 2 pi p / N")
    return bins.astype(int)


def ls_estimate(x, omegas) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares A'_i and B'_i at Fourier frequencies.

    A' = (2/N) sum x_n cos(w n), B' = (2/N) sum x_n sin(w n).
    """
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    fourier_bins(w, n)
    t = np.arange(n)
    arg = np.outer(w, t)
    return 2 / n * (np.cos(arg) @ x), 2 / n * (np.sin(arg) @ x)


def noise_variance_estimate(x, omegas=(), a_hat=(), b_hat=()) -> float:
    """Residual mean square sum(x - fit)^2 / (N - 2k) for a k-harmonic fit."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    w = np.atleast_1d(np.asarray(omegas, dtype=float))
    k = len(w)
    if n <= 2 * k:
        raise ValueError("need N > 2k samples")
    t = np.arange(n)
    fit = np.zeros(n)
    if k:
        arg = np.outer(w, t)
        fit = np.asarray(a_hat) @ np.cos(arg) + np.asarray(b_hat) @ np.sin(arg)
    r = x - fit
    return float(r @ r / (n - 2 * k))


@dataclass(frozen=True, eq=False)
class PeriodogramResult:
    """Ordinates I_i for i = 0..N/2 and the transform coefficients behind them."""

    n: int
    ordinates: np.ndarray
    coefficients: np.ndarray
    alpha: int | None = None
    samples: np.ndarray | None = field(default=None, repr=False)

    @property
    def kind(self) -> str:
        return "exact" if self.alpha is None else f"approximate({self.alpha})"

    @property
    def frequencies(self) -> np.ndarray:
        return 2 * np.pi * np.arange(len(self.ordinates)) / self.n

    @property
    def interior(self) -> np.ndarray:
        """Ordinates 1..ceil(N/2)-1, excluding DC and Nyquist."""
        return self.ordinates[1:(self.n + 1) // 2]


def _periodogram(x, alpha, method) -> PeriodogramResult:
    x = np.asarray(x)
    if x.ndim != 1:
        raise ValueError("samples must be one-dimensional")
    n = len(x)
    if method == "direct":
        if alpha is not None:
            raise ValueError("the direct path computes the exact periodogram only")
        if n < 1:
            raise ValueError("need at least one sample")
        t = np.arange(n)
        i = np.arange(n // 2 + 1)
        spec = np.exp(-2j * np.pi * np.outer(i, t) / n) @ x
    elif method == "matrix":
        check_length(n)
        spec = apply(compile_factored(n, alpha), x)[: n // 2 + 1]
    else:
        raise ValueError(f"unknown method {method!r}")
    ords = 2 / n * np.abs(spec) ** 2
    return PeriodogramResult(n, ords, spec, alpha, np.array(x, dtype=float))


def exact_periodogram(x, method: str = "matrix") -> PeriodogramResult:
    """I_i = (2/N) |(F_N x)_i|^2 for i = 0..N/2.

    ``method="matrix"`` uses the factored exact transform (N a power of two);
    ``method="direct"`` sums the definition and accepts any N.
    """
    return _periodogram(x, None, method)


def approx_periodogram(x, alpha: int) -> PeriodogramResult:
    """I~_i = (2/N) |(F~_N(alpha) x)_i|^2 for i = 0..N/2."""
    return _periodogram(x, check_alpha(alpha), "matrix")


def periodogram_gain(n: int, alpha: int) -> float:
    """Model gain a_1^{2 log2(N/4)} between approximate and exact ordinates."""
    return a1(check_alpha(alpha)) ** (2 * math.log2(check_length(n) / 4))


def fejer_kernel(theta, n: int):
    """F_N(theta) = sin^2(N theta/2) / (2 pi N sin^2(theta/2)), N/(2 pi) at theta = 0 mod 2 pi."""
    th = np.asarray(theta, dtype=float)
    s = np.sin(th / 2)
    num = np.sin(n * th / 2) ** 2
    with np.errstate(divide="ignore", invalid="ignore"):
        val = num / (2 * np.pi * n * s**2)
    # removable singularity at multiples of 2 pi
    near = np.abs(s) < 1e-12
    val = np.where(near, n / (2 * np.pi), val)
    return float(val) if val.ndim == 0 else val


def expected_periodogram(model: HarmonicModel, omega, n: int):
    """E[I_N(omega)] = 2 sigma^2 + pi sum A_i^2 [F_N(omega + w_i) + F_N(omega - w_i)]."""
    w = np.asarray(omega, dtype=float)
    out = 2 * model.noise_sd**2 + np.zeros_like(w)
    for a, wi in zip(model.amplitudes, model.frequencies):
        out = out + np.pi * a**2 * (fejer_kernel(w + wi, n) + fejer_kernel(w - wi, n))
    return float(out) if out.ndim == 0 else out


def periodogram_covariance(omega1, omega2, sigma_sq: float, kappa4: float, n: int):
    """Cov(I_N(w1), I_N(w2)) for i.i.d. noise with variance sigma_sq and fourth cumulant kappa4.

    Equals 4 kappa4 / N + (8 pi sigma_sq^2 / N) [F_N(w1 + w2) + F_N(w1 - w2)],
    so the variance is 4 sigma^4 at interior Fourier frequencies and 8 sigma^4
    at 0 and pi for Gaussian noise.
    """
    w1 = np.asarray(omega1, dtype=float)
    w2 = np.asarray(omega2, dtype=float)
    val = 4 * kappa4 / n + 8 * np.pi * sigma_sq**2 / n * (
        fejer_kernel(w1 + w2, n) + fejer_kernel(w1 - w2, n)
    )
    return float(val) if np.ndim(val) == 0 else val


def periodogram_variance(omega, sigma_sq: float, kappa4: float, n: int):
    return periodogram_covariance(omega, omega, sigma_sq, kappa4, n)


def fisher_pvalue(z: float, n: int) -> float:
    """P[g > z] for the largest of n exchangeable exponential ordinates.

    Exact alternating series sum_{a=1}^{floor(1/z)} (-1)^(a-1) C(n, a) (1 - a z)^(n-1),
    clamped to [0, 1].  Terms are summed with ``math.fsum``; when they are
    large enough for cancellation to matter the sum is redone in decimal
    arithmetic with extra digits.
    """
    if n < 2:
        raise ValueError("need at least two ordinates")
    if z * n <= 1:
        return 1.0  # g >= 1/n always
    if z >= 1:
        return 0.0
    top = min(int(math.floor(1 / z)), n)
    terms = []
    for a in range(1, top + 1):
        base = 1 - a * z
        if base <= 0:
            break
        terms.append((-1) ** (a - 1) * math.comb(n, a) * base ** (n - 1))
    big = max(abs(t) for t in terms)
    if big < 1e6:
        total = math.fsum(terms)
    else:
        # carry enough digits to absorb the cancellation
        with decimal.localcontext() as ctx:
            ctx.prec = 34 + int(math.log10(big))
            zd = decimal.Decimal(z)
            total = float(sum(
                (-1) ** (a - 1) * math.comb(n, a) * (1 - a * zd) ** (n - 1)
                for a in range(1, top + 1) if a * zd < 1
            ))
    return min(max(total, 0.0), 1.0)


def fisher_pvalue_first_term(z: float, n: int) -> float:
    """First term n (1 - z)^(n-1) of the series, an upper bound for small z."""
    return n * max(1 - z, 0.0) ** (n - 1)


@dataclass(frozen=True)
class FisherResult:
    g: float
    p_value: float
    p_value_first_term: float
    index: int
    count: int


def fisher_g(ordinates) -> FisherResult:
    """Fisher's g = max I_i / sum I_i over the given (interior) ordinates."""
    o = np.asarray(ordinates, dtype=float)
    if o.size < 2:
        raise ValueError("need at least two ordinates")
    if np.any(o < 0):
        raise ValueError("ordinates must be nonnegative")
    total = math.fsum(o)
    if total == 0:
        raise ValueError("all ordinates are zero")
    idx = int(np.argmax(o))
    g = float(o[idx] / total)
    return FisherResult(g, fisher_pvalue(g, o.size), fisher_pvalue_first_term(g, o.size), idx, o.size)


@dataclass(frozen=True)
class Peak:
    bin: int
    freq_rad: float
    g: float
    p_value: float
    a_hat: float
    b_hat: float
    ordinate: float

    def to_dict(self) -> dict:
        return {
            "bin": self.bin,
            "freq_rad": self.freq_rad,
            "g": self.g,
            "p_value": self.p_value,
            "a_hat": self.a_hat,
            "b_hat": self.b_hat,
        }


@dataclass(frozen=True)
class DetectionReport:
    n: int
    alpha: int | None
    zeta: float
    peaks: tuple[Peak, ...]
    sigma_hat_sq: float
    seed: int | None = None

    @property
    def k_hat(self) -> int:
        return len(self.peaks)

    @property
    def bins(self) -> list[int]:
        return [p.bin for p in self.peaks]

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "alpha": self.alpha,
            "exact": self.alpha is None,
            "zeta": self.zeta,
            "seed": self.seed,
            "peaks": [p.to_dict() for p in self.peaks],
            "k_hat": self.k_hat,
            "sigma_hat_sq": self.sigma_hat_sq,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def whittle_detect(pr: PeriodogramResult, zeta: float, seed: int | None = None) -> DetectionReport:
    """Stepwise Fisher/Whittle detection over the interior ordinates.

    The largest remaining ordinate I_p is tested with g' = I_p / (sum I - removed)
    against n - s ordinates after s removals; the procedure stops at the first
    non-significant peak.  Amplitudes of accepted peaks come from least
    squares on the samples (exact path) or from the transform row sums
    (approximate path), and the noise variance from the residual.
    """
    if not 0 < zeta < 1:
        raise ValueError("zeta must lie in (0, 1)")
    interior = pr.interior
    bins = np.arange(1, 1 + len(interior))
    order = np.argsort(-interior, kind="stable")
    total = math.fsum(interior)
    accepted = []
    removed = []
    m = len(interior)
    for s, j in enumerate(order):
        rest = total - math.fsum(removed)
        if m - s < 2 or rest <= 0 or interior[j] <= 0:
            break
        g = float(interior[j] / rest)
        p = fisher_pvalue(g, m - s)
        if p >= zeta:
            break
        accepted.append((int(bins[j]), g, p, float(interior[j])))
        removed.append(float(interior[j]))

    n = pr.n
    peaks = []
    omegas = [2 * np.pi * b / n for b, *_ in accepted]
    if pr.alpha is None and pr.samples is not None and accepted:
        a_hat, b_hat = ls_estimate(pr.samples, omegas)
    else:
        coef = np.array([pr.coefficients[b] for b, *_ in accepted])
        a_hat, b_hat = 2 / n * coef.real, -2 / n * coef.imag
    for (b, g, p, o), w, ah, bh in zip(accepted, omegas, a_hat, b_hat):
        peaks.append(Peak(b, float(w), g, p, float(ah), float(bh), o))
    if pr.samples is not None:
        sigma = noise_variance_estimate(pr.samples, omegas, a_hat, b_hat)
    else:
        sigma = float("nan")
    return DetectionReport(n, pr.alpha, float(zeta), tuple(peaks), sigma, seed)


def load_samples(path: str | os.PathLike) -> np.ndarray:
    """Read real samples from a JSON array or a CSV with one value per line."""
    text = Path(path).read_text()
    stripped = text.strip()
    if stripped.startswith("["):
        data = json.loads(stripped)
        if not isinstance(data, list):
            raise ValueError(f"{path}: expected a JSON array")
        vals = [float(v) for v in data]
    else:
        vals = []
        for lineno, line in enumerate(stripped.splitlines(), 1):
            line = line.strip()
            if not line:
                continue
            try:
                vals.append(float(line.split(",")[0]))
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}:{lineno}: cannot parse {line!r}") from None
    arr = np.asarray(vals, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{path}: samples must be finite")
    return arr
