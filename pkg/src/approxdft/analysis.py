"""Quality metrics, bound checks and error models for approximate DFTs."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev
from scipy import integrate

from approxdft.transform import (
    ComplexityReport,
    approx_twiddle_diagonal,
    build_approx_dft,
    build_exact_dft,
    check_alpha,
    check_length,
    count_complexity,
    exact_twiddle_diagonal,
    scaled_round,
)

__all__ = [
    "transfer_function",
    "ErrorEnergy",
    "total_error_energy",
    "orthogonality_deviation",
    "frobenius_error",
    "BoundCheck",
    "BoundReport",
    "verify_bounds",
    "FourierCoefficients",
    "fourier_coeff_b",
    "fourier_coeff_a",
    "fourier_coefficients",
    "fourier_coeff_quadrature",
    "a1",
    "ErrorEstimate",
    "estimate_error_I",
    "estimate_error_II",
    "estimate_error_III",
    "MetricsRecord",
    "compute_metrics",
    "metrics_csv",
    "ENERGY_PANELS",
    "COEFF_PANELS",
]

ENERGY_PANELS = 8192
COEFF_PANELS = 1 << 16


def transfer_function(t, i: int, omega):
    """H_i(omega) = sum_k T[i, k] exp(-j k omega) for row i of ``t``.

    ``omega`` may be a scalar or an array; the result has the same shape.
    """
    t = np.asarray(t)
    if not 0 <= i < t.shape[0]:
        raise IndexError(f"row {i} out of range for {t.shape[0]} rows")
    w = np.asarray(omega, dtype=float)
    k = np.arange(t.shape[1])
    h = np.exp(-1j * np.multiply.outer(w, k)) @ t[i]
    return complex(h) if h.ndim == 0 else h


def _responses_on_grid(rows: np.ndarray, panels: int) -> np.ndarray:
    """Evaluate every row's transfer function at omega_m = -pi + 2 pi m / panels.

    Returns an array of shape (rows, panels + 1).  Uses one zero-padded
    FFT per row; the extra endpoint repeats m = 0 by periodicity.
    """
    n = rows.shape[1]
    alt = rows * np.where(np.arange(n) % 2, -1.0, 1.0)
    if n > panels:
        folded = np.zeros((rows.shape[0], panels), dtype=complex)
        for start in range(0, n, panels):
            block = alt[:, start:start + panels]
            folded[:, : block.shape[1]] += block
        alt = folded
    spec = np.fft.fft(alt, n=panels, axis=1)
    return np.concatenate([spec, spec[:, :1]], axis=1)


@dataclass(frozen=True)
class ErrorEnergy:
    """Per-row total error energy (closed form) with its quadrature check."""

    per_row: np.ndarray
    quadrature: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.per_row))

    @property
    def max_relative_gap(self) -> float:
        scale = np.maximum(np.abs(self.per_row), 1e-300)
        gap = np.abs(self.quadrature - self.per_row)
        gap = np.where((self.per_row == 0) & (gap < 1e-12), 0.0, gap / scale)
        return float(np.max(gap)) if gap.size else 0.0


def total_error_energy(exact, approx, *, panels: int = ENERGY_PANELS, rtol: float = 1e-6) -> ErrorEnergy:
    """Total error energy eps_i = int_{-pi}^{pi} |H_i(w, exact) - H_i(w, approx)|^2 dw.

    The reported values use the Parseval form 2 pi sum_k |exact - approx|^2.
    Composite Simpson on ``panels`` uniform panels is computed alongside and
    must agree to ``rtol``; otherwise ``ArithmeticError`` is raised.
    """
    exact = np.asarray(exact, dtype=complex)
    approx = np.asarray(approx, dtype=complex)
    if exact.shape != approx.shape:
        raise ValueError(f"shape mismatch: {exact.shape} vs {approx.shape}")
    delta = exact - approx
    closed = 2 * np.pi * np.sum(np.abs(delta) ** 2, axis=1)
    grid = np.linspace(-np.pi, np.pi, panels + 1)
    d = np.abs(_responses_on_grid(delta, panels)) ** 2
    quad = integrate.simpson(d, x=grid, axis=1)
    res = ErrorEnergy(closed, quad)
    bad = np.abs(quad - closed) > rtol * np.abs(closed) + 1e-12
    if np.any(bad):
        raise ArithmeticError(
            f"quadrature and Parseval error energies disagree (max relative gap {res.max_relative_gap:.3g})"
        )
    return res


def orthogonality_deviation(m) -> float:
    """delta(M) = 1 - ||diag(M M^H)||^2 / ||M M^H||_F^2, in [0, 1]."""
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError("orthogonality deviation needs a square matrix")
    p = m @ m.conj().T
    total = np.sum(np.abs(p) ** 2)
    if total == 0:
        return 0.0
    d = 1.0 - np.sum(np.abs(np.diag(p)) ** 2) / total
    return float(min(max(d, 0.0), 1.0))


def frobenius_error(exact, approx) -> float:
    return float(np.linalg.norm(np.asarray(exact) - np.asarray(approx)))


@dataclass(frozen=True)
class BoundCheck:
    name: str
    measured: float
    bound: float
    holds: bool

    @property
    def slack(self) -> float:
        return self.bound - self.measured


@dataclass(frozen=True)
class BoundReport:
    n: int
    alpha: int | None
    checks: tuple[BoundCheck, ...]

    @property
    def all_hold(self) -> bool:
        return all(c.holds for c in self.checks)

    def __getitem__(self, name: str) -> BoundCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)


def verify_bounds(n: int, alpha: int | None) -> BoundReport:
    """Check the twiddle rounding bounds for every entry of W~_n.

    Checks (each reported with its measured value and slack):

    - ``component_error``: max |Re/Im error| <= 1/(2 alpha)
    - ``twiddle_error``: max |W - W~| <= 1/(sqrt(2) alpha)
    - ``magnitude_upper`` / ``magnitude_lower``: 1 -+ 1/(sqrt(2) alpha)
    - ``magnitude_upper_uniform`` / ``magnitude_lower_uniform``: 1 -+ 1/sqrt(2)
    - ``frobenius_upper`` / ``frobenius_lower``: (1 -+ 1/sqrt(2)) sqrt(n)

    Lower bounds are stored with their sign flipped so that ``holds`` always
    means ``measured <= bound``.  ``alpha=None`` checks the exact diagonal
    with zero error allowance.
    """
    n = check_length(n)
    exact = exact_twiddle_diagonal(n).entries
    if alpha is None:
        approx = exact
        eps_c = eps = 0.0
    else:
        alpha = check_alpha(alpha)
        approx = approx_twiddle_diagonal(n, alpha).entries
        eps_c = 1 / (2 * alpha)
        eps = 1 / (math.sqrt(2) * alpha)
    diff = exact - approx
    mag = np.abs(approx)
    s2 = 1 / math.sqrt(2)
    fro = float(np.linalg.norm(approx))
    # float rounding of the exact roots can leave ~1e-16 above a tight bound
    tol = 1e-12
    comp = float(max(np.max(np.abs(diff.real)), np.max(np.abs(diff.imag))))
    raw = [
        ("component_error", comp, eps_c),
        ("twiddle_error", float(np.max(np.abs(diff))), eps),
        ("magnitude_upper", float(np.max(mag)), 1 + eps),
        ("magnitude_lower", -float(np.min(mag)), -(1 - eps)),
        ("magnitude_upper_uniform", float(np.max(mag)), 1 + s2),
        ("magnitude_lower_uniform", -float(np.min(mag)), -(1 - s2)),
        ("frobenius_upper", fro, (1 + s2) * math.sqrt(n)),
        ("frobenius_lower", -fro, -(1 - s2) * math.sqrt(n)),
    ]
    checks = tuple(BoundCheck(name, m, b, m <= b + tol) for name, m, b in raw)
    return BoundReport(n, alpha, checks)


def _chebyshev_t(order: int, x: np.ndarray) -> np.ndarray:
    coef = np.zeros(order + 1)
    coef[order] = 1.0
    return chebyshev.chebval(x, coef)


def fourier_coeff_b(n: int, alpha: int) -> float:
    """Sine-series coefficient b_n of round(alpha sin t)/alpha.

    b_n = (2/(n pi alpha)) (1 + (-1)^(n+1)) sum_{i=1}^{alpha} T_n(sqrt(1 - ((2i-1)/(2 alpha))^2)),
    which vanishes for even n.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    alpha = check_alpha(alpha)
    if n % 2 == 0:
        return 0.0
    i = np.arange(1, alpha + 1)
    x = np.sqrt(1 - ((2 * i - 1) / (2 * alpha)) ** 2)
    return float(4 / (n * math.pi * alpha) * math.fsum(_chebyshev_t(n, x)))


def fourier_coeff_a(n: int, alpha: int) -> float:
    """Cosine-series coefficient a_n of round(alpha cos t)/alpha.

    a_n = (-1)^((n-1)/2) b_n for odd n and 0 for even n.
    """
    b = fourier_coeff_b(n, alpha)
    if n % 2 == 0:
        return 0.0
    return b if ((n - 1) // 2) % 2 == 0 else -b


@dataclass(frozen=True)
class FourierCoefficients:
    alpha: int
    order: int
    a_n: float
    b_n: float


def fourier_coefficients(n: int, alpha: int) -> FourierCoefficients:
    return FourierCoefficients(check_alpha(alpha), n, fourier_coeff_a(n, alpha), fourier_coeff_b(n, alpha))


@lru_cache(maxsize=None)
def a1(alpha: int) -> float:
    """First harmonic coefficient a_1 = b_1 of the scaled-rounded sinusoid."""
    return fourier_coeff_b(1, alpha)


def fourier_coeff_quadrature(n: int, alpha: int, panels: int = COEFF_PANELS) -> float:
    """b_n by numerical integration of (2/pi) int_0^pi round(alpha sin t)/alpha sin(n t) dt.

    The rounded sinusoid is piecewise constant, so the interval is split at
    its jump points and composite Simpson is applied on each piece, using
    ``panels`` panels in total.
    """
    if n < 1:
        raise ValueError("order must be >= 1")
    alpha = check_alpha(alpha)
    # jumps where alpha sin t crosses a half integer
    levels = (np.arange(alpha) + 0.5) / alpha
    left = np.arcsin(levels)
    cuts = np.unique(np.concatenate([[0.0, math.pi], left, math.pi - left]))
    pieces = []
    for a, b in zip(cuts[:-1], cuts[1:]):
        k = max(2, 2 * int(round(panels * (b - a) / math.pi / 2)))
        t = np.linspace(a, b, k + 1)
        mid = 0.5 * (a + b)
        # the rounded value is constant on the open piece, so sample it at the midpoint
        level = scaled_round(math.sin(mid), alpha)
        pieces.append(level * integrate.simpson(np.sin(n * t), x=t))
    total = math.fsum(pieces)
    return 2 / math.pi * total


@dataclass(frozen=True)
class ErrorEstimate:
    """Heuristic estimate of the relative error ||F_N - F~_N||_F / N."""

    n: int
    alpha: int
    method: str
    relative_error: float
    heuristic: bool = True


def _error_recursion(n: int, step, literal: bool) -> float:
    # step(m) is the per-level twiddle error term at length m
    if literal:
        r2 = 0.0
        m = 8
        while m <= n:
            r = math.sqrt(r2)
            r2 = 2 * r2 + 2 * ((0.5 + r) * step(m) + r) ** 2
            m *= 2
        return math.sqrt(r2)
    e2 = 0.0
    m = 8
    while m <= n:
        e = math.sqrt(e2)
        e2 = 2 * e2 + 2 * ((m / 2 + e) * step(m) + e) ** 2
        m *= 2
    return math.sqrt(e2) / n


def estimate_error_I(n: int, alpha: int, *, literal: bool = False) -> ErrorEstimate:
    """Relative error estimate assuming a per-twiddle error of 1/(sqrt(2) alpha).

    The recursion runs on the absolute norm,

        e_N^2 = 2 e_{N/2}^2 + 2 [(N/2 + e_{N/2}) sqrt(2)/(alpha N) + e_{N/2}]^2,

    from e_4 = 0 and is divided by ||F_N||_F = N at the end.  With
    ``literal=True`` the same recursion is applied directly to relative
    norms, which omits the factor 1/4 from ||F_{N/2}||_F = N/2 and grows
    without bound in N.
    """
    n = check_length(n)
    alpha = check_alpha(alpha)
    val = _error_recursion(n, lambda m: math.sqrt(2) / (alpha * m), literal)
    return ErrorEstimate(n, alpha, "analysis-I", val)


def estimate_error_II(n: int, alpha: int, *, literal: bool = False) -> ErrorEstimate:
    """As :func:`estimate_error_I` with per-level term |1 - a_1| / (N/2)."""
    n = check_length(n)
    alpha = check_alpha(alpha)
    gap = abs(1 - a1(alpha))
    val = _error_recursion(n, lambda m: gap / (m / 2), literal)
    return ErrorEstimate(n, alpha, "analysis-II", val)


def estimate_error_III(n: int, alpha: int) -> ErrorEstimate:
    """Relative error of the global-gain model F~_N ~ a_1^{log2(N/4)} F_N."""
    n = check_length(n)
    alpha = check_alpha(alpha)
    val = abs(1 - a1(alpha) ** math.log2(n / 4))
    return ErrorEstimate(n, alpha, "analysis-III", val)


# delta and total-error-energy targets per alpha: {N: (sum eps, delta)}
PUBLISHED_TABLES = {
    2: {
        4: (0.0, 0.0), 8: (4.86e-1, 3.85e-2), 16: (5.08e-1, 1.48e-2),
        32: (6.49e-1, 2.12e-2), 64: (7.08e-1, 5.85e-2), 128: (7.58e-1, 8.04e-2),
        256: (7.89e-1, 9.98e-2), 512: (8.12e-1, 1.14e-1), 1024: (8.23e-1, 1.28e-1),
    },
    4: {
        4: (0.0, 0.0), 8: (1.01e-1, 1.83e-3), 16: (3.00e-1, 7.36e-3),
        32: (3.75e-1, 5.56e-3), 64: (3.81e-1, 3.93e-4), 128: (3.93e-1, 5.47e-3),
        256: (4.03e-1, 1.01e-2), 512: (4.07e-1, 1.47e-2), 1024: (4.12e-1, 1.93e-2),
    },
    16: {
        4: (0.0, 0.0), 8: (4.60e-2, 3.84e-4), 16: (4.98e-2, 2.32e-4),
        32: (5.74e-2, 2.41e-5), 64: (6.18e-2, 2.02e-4), 128: (6.74e-2, 3.75e-4),
        256: (7.57e-2, 5.46e-4), 512: (8.18e-2, 7.98e-4), 1024: (8.64e-2, 1.10e-3),
    },
}


@dataclass(frozen=True)
class MetricsRecord:
    n: int
    alpha: int
    total_error_energy: float
    orthogonality_deviation: float
    frobenius_error: float
    relative_frobenius_error: float
    complexity: ComplexityReport
    energy_quadrature_gap: float = 0.0
    reference: tuple[float, float] | None = field(default=None)

    @property
    def energy_ratio(self) -> float | None:
        """Measured total error energy over the published value, if any."""
        if self.reference is None or self.reference[0] == 0:
            return None
        return self.total_error_energy / self.reference[0]

    @property
    def delta_ratio(self) -> float | None:
        if self.reference is None or self.reference[1] == 0:
            return None
        return self.orthogonality_deviation / self.reference[1]


def compute_metrics(n: int, alpha: int) -> MetricsRecord:
    """All quality metrics for F~_n(alpha) against F_n."""
    n = check_length(n)
    alpha = check_alpha(alpha)
    exact = build_exact_dft(n)
    approx = build_approx_dft(n, alpha)
    energy = total_error_energy(exact, approx)
    fro = frobenius_error(exact, approx)
    return MetricsRecord(
        n=n,
        alpha=alpha,
        total_error_energy=energy.total,
        orthogonality_deviation=orthogonality_deviation(approx),
        frobenius_error=fro,
        relative_frobenius_error=fro / n,
        complexity=count_complexity(n, alpha),
        energy_quadrature_gap=energy.max_relative_gap,
        reference=PUBLISHED_TABLES.get(alpha, {}).get(n),
    )


METRICS_HEADER = [
    "N", "alpha", "total_error_energy", "orthogonality_deviation", "frobenius_error",
    "relative_error", "complex_adds", "real_adds", "shifts",
]


def _g6(x) -> str:
    return "" if x is None else f"{x:.6g}"


def metrics_csv(records, *, with_reference: bool = False) -> str:
    """CSV text for metrics records, numbers at 6 significant digits.

    With ``with_reference`` two columns compare against the published
    tables: the ratio of total error energies and of deltas.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = list(METRICS_HEADER)
    if with_reference:
        header += ["energy_ratio_to_table", "delta_ratio_to_table"]
    w.writerow(header)
    for r in records:
        row = [
            r.n, r.alpha, _g6(r.total_error_energy), _g6(r.orthogonality_deviation),
            _g6(r.frobenius_error), _g6(r.relative_frobenius_error),
            r.complexity.complex_additions, r.complexity.real_additions, r.complexity.bit_shifts,
        ]
        if with_reference:
            row += [_g6(r.energy_ratio), _g6(r.delta_ratio)]
        w.writerow(row)
    return buf.getvalue()
