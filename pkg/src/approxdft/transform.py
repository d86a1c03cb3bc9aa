"""Exact and approximate radix-2 DFT transforms.

The approximate N-point transform is built with the decimation-in-time
recursion

    F~_N = A_N . W~_N . (I_2 kron F~_{N/2}) . B_N,   F~_4 = F_4,

where the twiddle diagonal W~_N holds scaled-rounded roots of unity, so
every twiddle has real and imaginary parts that are integer multiples of
1/alpha.  With alpha a power of two, each twiddle multiplication reduces
to additions and bit shifts.
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path
from typing import Iterable

import numpy as np
from scipy import linalg

__all__ = [
    "F4",
    "check_length",
    "check_alpha",
    "scaled_round",
    "scaled_round_complex",
    "round_numerator",
    "TwiddleDiagonal",
    "DecimationPermutation",
    "Stage",
    "FactoredTransform",
    "ComplexityReport",
    "Determinant",
    "exact_twiddle_diagonal",
    "approx_twiddle_diagonal",
    "decimation_permutation",
    "butterfly_matrix",
    "direct_dft",
    "build_exact_dft",
    "build_approx_dft",
    "build_dft",
    "compile_factored",
    "apply",
    "apply_inverse",
    "determinant_closed_form",
    "lu_determinant",
    "count_complexity",
    "write_matrix_csv",
    "read_matrix_csv",
]

F4 = np.array(
    [
        [1, 1, 1, 1],
        [1, -1j, -1, 1j],
        [1, -1, 1, -1],
        [1, 1j, -1, -1j],
    ],
    dtype=complex,
)
F4.setflags(write=False)


def _frozen(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def check_length(n) -> int:
    """Validate a transform length: a power of two with n >= 4."""
    if isinstance(n, (bool, np.bool_)) or not isinstance(n, (int, np.integer)):
        raise ValueError(f"N must be a power of two ≥ 4 (got {n!r})")
    n = int(n)
    if n < 4 or n & (n - 1):
        raise ValueError(f"N must be a power of two ≥ 4 (got {n})")
    return n


def check_alpha(alpha) -> int:
    """Validate a precision parameter: a power of two with alpha >= 1."""
    if isinstance(alpha, (bool, np.bool_)) or not isinstance(alpha, (int, np.integer)):
        raise ValueError(f"alpha must be a power of two ≥ 1 (got {alpha!r})")
    alpha = int(alpha)
    if alpha < 1 or alpha & (alpha - 1):
        raise ValueError(f"alpha must be a power of two ≥ 1 (got {alpha})")
    return alpha


def _check_finite(x) -> np.ndarray:
    arr = np.asarray(x)
    if not np.all(np.isfinite(arr)):
        raise ValueError("input must be finite")
    return arr


def round_numerator(x, alpha: int):
    """Integer numerator round(alpha * x), ties rounded half away from zero."""
    alpha = check_alpha(alpha)
    arr = _check_finite(x).astype(float)
    num = np.sign(arr) * np.floor(np.abs(arr) * alpha + 0.5)
    if num.ndim == 0:
        return int(num)
    return num.astype(np.int64)


def scaled_round(x, alpha: int):
    """Scaled rounding round(alpha * x) / alpha.

    Works elementwise on arrays.  Ties are rounded half away from zero, so
    the operator is odd: scaled_round(-x) == -scaled_round(x).

    Raises
    ------
    ValueError
        If any input is NaN or infinite, or alpha is not a power of two.
    """
    alpha = check_alpha(alpha)
    arr = _check_finite(x).astype(float)
    out = np.sign(arr) * np.floor(np.abs(arr) * alpha + 0.5) / alpha
    return float(out) if out.ndim == 0 else out


def scaled_round_complex(z, alpha: int):
    """Apply :func:`scaled_round` to the real and imaginary parts separately."""
    arr = _check_finite(z).astype(complex)
    out = scaled_round(arr.real, alpha) + 1j * scaled_round(arr.imag, alpha)
    return complex(out) if np.ndim(out) == 0 else out


def _roots(n: int, count: int) -> np.ndarray:
    k = np.arange(count)
    return np.exp(-2j * np.pi * (k % n) / n)


@dataclass(frozen=True, eq=False)
class TwiddleDiagonal:
    """Diagonal of W_N (exact) or W~_N (approximate).

    The first n/2 entries are exactly 1 and entry n/2 + k is the k-th
    twiddle.  For the approximate diagonal, ``re_num`` and ``im_num`` hold
    the integer numerators over ``alpha`` of every entry.
    """

    n: int
    entries: np.ndarray
    alpha: int | None = None
    re_num: np.ndarray | None = None
    im_num: np.ndarray | None = None

    @property
    def is_exact(self) -> bool:
        return self.alpha is None

    @property
    def half(self) -> np.ndarray:
        """The twiddles that actually multiply, entries[n/2:]."""
        return self.entries[self.n // 2:]

    def as_matrix(self) -> np.ndarray:
        return np.diag(self.entries)

    def log2_abs_det(self) -> float:
        return float(np.sum(np.log2(np.abs(self.entries))))

    def arg_det(self) -> float:
        return float(np.sum(np.angle(self.entries)))


@lru_cache(maxsize=None)
def exact_twiddle_diagonal(n: int) -> TwiddleDiagonal:
    """Exact twiddle diagonal: n/2 ones followed by W_n^0 .. W_n^{n/2-1}."""
    n = check_length(n)
    entries = np.concatenate([np.ones(n // 2, dtype=complex), _roots(n, n // 2)])
    return TwiddleDiagonal(n, _frozen(entries))


@lru_cache(maxsize=None)
def approx_twiddle_diagonal(n: int, alpha: int) -> TwiddleDiagonal:
    """Scaled-rounded twiddle diagonal with precision parameter alpha."""
    n = check_length(n)
    alpha = check_alpha(alpha)
    exact = exact_twiddle_diagonal(n).entries
    re_num = round_numerator(exact.real, alpha)
    im_num = round_numerator(exact.imag, alpha)
    entries = (re_num + 1j * im_num) / alpha
    return TwiddleDiagonal(
        n, _frozen(entries), alpha, _frozen(re_num), _frozen(im_num)
    )


def twiddle_diagonal(n: int, alpha: int | None = None) -> TwiddleDiagonal:
    return exact_twiddle_diagonal(n) if alpha is None else approx_twiddle_diagonal(n, alpha)


@dataclass(frozen=True, eq=False)
class DecimationPermutation:
    """Even/odd split B_N as an index map: (B x)[i] = x[map[i]]."""

    n: int
    map: np.ndarray

    def apply(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x)[..., self.map]

    def sign(self) -> int:
        """Sign (+1 or -1) of the permutation, i.e. det(B_N)."""
        seen = np.zeros(self.n, dtype=bool)
        parity = 0
        for start in range(self.n):
            if seen[start]:
                continue
            length = 0
            j = start
            while not seen[j]:
                seen[j] = True
                j = int(self.map[j])
                length += 1
            parity += length - 1
        return -1 if parity % 2 else 1

    def as_matrix(self) -> np.ndarray:
        b = np.zeros((self.n, self.n))
        b[np.arange(self.n), self.map] = 1.0
        return b


@lru_cache(maxsize=None)
def decimation_permutation(n: int) -> DecimationPermutation:
    n = check_length(n)
    idx = np.concatenate([np.arange(0, n, 2), np.arange(1, n, 2)])
    return DecimationPermutation(n, _frozen(idx))


def butterfly_matrix(n: int) -> np.ndarray:
    """A_N = [[I, I], [I, -I]] as a dense matrix."""
    n = check_length(n)
    eye = np.eye(n // 2)
    return np.block([[eye, eye], [eye, -eye]])


def direct_dft(n: int) -> np.ndarray:
    """DFT matrix straight from the definition exp(-2 pi j i k / n)."""
    i = np.arange(n)
    return np.exp(-2j * np.pi * (np.outer(i, i) % n) / n)


@lru_cache(maxsize=64)
def _dense(n: int, alpha: int | None) -> np.ndarray:
    if n == 4:
        return F4
    h = n // 2
    sub = _dense(h, alpha)
    ws = twiddle_diagonal(n, alpha).half[:, None] * sub
    out = np.empty((n, n), dtype=complex)
    out[:h, 0::2] = sub
    out[:h, 1::2] = ws
    out[h:, 0::2] = sub
    out[h:, 1::2] = -ws
    return _frozen(out)


def build_exact_dft(n: int) -> np.ndarray:
    """Exact DFT matrix F_n from the radix-2 recursion (read-only array)."""
    return _dense(check_length(n), None)


def build_approx_dft(n: int, alpha: int) -> np.ndarray:
    """Approximate DFT matrix F~_n(alpha) (read-only array).

    For n = 4 this is F_4 itself.
    """
    return _dense(check_length(n), check_alpha(alpha))


def build_dft(n: int, alpha: int | None = None) -> np.ndarray:
    """Exact transform when alpha is None, approximate otherwise."""
    return build_exact_dft(n) if alpha is None else build_approx_dft(n, alpha)


@dataclass(frozen=True, eq=False)
class Stage:
    """One recursion level: length m, its twiddles and its decimation."""

    m: int
    twiddle: TwiddleDiagonal
    permutation: DecimationPermutation


@dataclass(frozen=True, eq=False)
class FactoredTransform:
    """Staged O(N log N) representation of F_N or F~_N.

    ``stages`` runs from length 8 up to n.  Application first gathers the
    input through the composed decimation permutations, applies F_4 to each
    block of four, then runs the butterfly stages in increasing length.
    """

    n: int
    alpha: int | None
    stages: tuple[Stage, ...]
    base: np.ndarray = F4

    def __post_init__(self):
        if len(self.stages) != int(math.log2(self.n)) - 2:
            raise ValueError("stage count must be log2(n) - 2")
        perm = np.arange(self.n)
        for st in reversed(self.stages):
            perm = perm.reshape(-1, st.m)[:, st.permutation.map].reshape(-1)
        object.__setattr__(self, "_perm", _frozen(perm))

    @property
    def is_exact(self) -> bool:
        return self.alpha is None

    @property
    def input_permutation(self) -> np.ndarray:
        return self._perm

    def __call__(self, x) -> np.ndarray:
        return apply(self, x)

    def to_dense(self) -> np.ndarray:
        """Dense matrix obtained by applying the stages to every basis vector."""
        return apply(self, np.eye(self.n, dtype=complex)).T

    def to_json(self) -> str:
        stages = []
        for st in self.stages:
            d = {"m": st.m, "permutation": st.permutation.map.tolist()}
            tw = st.twiddle
            if tw.is_exact:
                d["twiddle_re"] = tw.entries.real.tolist()
                d["twiddle_im"] = tw.entries.imag.tolist()
            else:
                d["twiddle_re_num"] = tw.re_num.tolist()
                d["twiddle_im_num"] = tw.im_num.tolist()
            stages.append(d)
        return json.dumps({"n": self.n, "alpha": self.alpha, "stages": stages})

    @classmethod
    def from_json(cls, text: str) -> "FactoredTransform":
        data = json.loads(text)
        n = check_length(data["n"])
        alpha = data.get("alpha")
        if alpha is not None:
            alpha = check_alpha(alpha)
        stages = []
        for d in data["stages"]:
            m = check_length(d["m"])
            perm = np.asarray(d["permutation"], dtype=np.int64)
            if sorted(perm.tolist()) != list(range(m)):
                raise ValueError(f"stage {m}: permutation is not a bijection")
            if alpha is None:
                entries = np.asarray(d["twiddle_re"]) + 1j * np.asarray(d["twiddle_im"])
                tw = TwiddleDiagonal(m, _frozen(entries))
            else:
                re_num = np.asarray(d["twiddle_re_num"], dtype=np.int64)
                im_num = np.asarray(d["twiddle_im_num"], dtype=np.int64)
                entries = (re_num + 1j * im_num) / alpha
                tw = TwiddleDiagonal(m, _frozen(entries), alpha, _frozen(re_num), _frozen(im_num))
            if tw.entries.shape != (m,):
                raise ValueError(f"stage {m}: twiddle length mismatch")
            stages.append(Stage(m, tw, DecimationPermutation(m, _frozen(perm))))
        return cls(n, alpha, tuple(stages))


@lru_cache(maxsize=None)
def compile_factored(n: int, alpha: int | None = None) -> FactoredTransform:
    """Factored transform for length n; alpha=None gives the exact DFT."""
    n = check_length(n)
    if alpha is not None:
        alpha = check_alpha(alpha)
    stages = []
    m = 8
    while m <= n:
        stages.append(Stage(m, twiddle_diagonal(m, alpha), decimation_permutation(m)))
        m *= 2
    return FactoredTransform(n, alpha, tuple(stages))


def apply(t: FactoredTransform, x) -> np.ndarray:
    """Compute t @ x in O(N log N).

    ``x`` may be a vector of length n or an array whose last axis has
    length n, in which case every row is transformed.
    """
    x = np.asarray(x)
    if x.shape[-1:] != (t.n,):
        raise ValueError(f"input length {x.shape[-1:] or 0} does not match transform length {t.n}")
    lead = x.shape[:-1]
    y = x[..., t.input_permutation].astype(complex).reshape(-1, t.n // 4, 4)
    y = (y @ t.base.T).reshape(-1, t.n)
    for st in t.stages:
        h = st.m // 2
        y = y.reshape(-1, t.n // st.m, 2, h)
        top = y[:, :, 0, :]
        bot = y[:, :, 1, :] * st.twiddle.half
        y = np.stack([top + bot, top - bot], axis=2)
    return y.reshape(*lead, t.n)


@lru_cache(maxsize=64)
def _lu_cached(n: int, alpha: int | None):
    return _lu(build_dft(n, alpha))


def _lu(m: np.ndarray):
    with warnings.catch_warnings():
        # singularity is reported below as an error instead
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(np.asarray(m, dtype=complex), check_finite=True)
    if np.any(np.diag(lu) == 0):
        raise np.linalg.LinAlgError("transform matrix is singular")
    return lu, piv


def apply_inverse(t, y) -> np.ndarray:
    """Solve T x = y by LU with partial pivoting.

    ``t`` is a dense matrix or a :class:`FactoredTransform`; the factorization
    of a factored transform is cached per (n, alpha).  ``y`` may hold several
    right-hand sides along its last axis, like :func:`apply`.
    """
    if isinstance(t, FactoredTransform):
        n = t.n
        lu = _lu_cached(t.n, t.alpha)
    else:
        m = np.asarray(t)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError("transform matrix must be square")
        n = m.shape[0]
        lu = _lu(m)
    y = np.asarray(y)
    if y.shape[-1:] != (n,):
        raise ValueError(f"input length {y.shape[-1:] or 0} does not match transform length {n}")
    lead = y.shape[:-1]
    x = linalg.lu_solve(lu, y.reshape(-1, n).T.astype(complex))
    return x.T.reshape(*lead, n)


@dataclass(frozen=True)
class Determinant:
    """A determinant kept as base-2 log magnitude and phase to avoid overflow."""

    log2_magnitude: float
    phase: float

    @property
    def magnitude(self) -> float:
        try:
            return 2.0 ** self.log2_magnitude
        except OverflowError:
            return math.inf

    @property
    def value(self) -> complex:
        quarter = self.phase / (math.pi / 2)
        if abs(quarter - round(quarter)) < 1e-12:
            unit = (1, 1j, -1, -1j)[round(quarter) % 4]
        else:
            unit = complex(math.cos(self.phase), math.sin(self.phase))
        return self.magnitude * unit

    def relative_difference(self, other: "Determinant") -> float:
        """|self/other - 1| evaluated in the log domain."""
        d = self.phase - other.phase
        ratio = complex(math.cos(d), math.sin(d)) * 2.0 ** (self.log2_magnitude - other.log2_magnitude)
        return abs(ratio - 1)


def _wrap(phase: float) -> float:
    p = math.remainder(phase, 2 * math.pi)
    return math.pi if p == -math.pi else p


def determinant_closed_form(n: int, alpha: int | None = None) -> Determinant:
    """Determinant of F~_n(alpha) (or F_n) from the recursion.

    value = prod_i (det A_M det W~_M det B_M)^(2^i) * det(F_4)^(n/4) with
    M = n / 2^i, and the magnitude is

        |det| = 2^(n log2(n) / 2) * prod_i |det W~_M|^(2^i).

    For exact twiddles this is n^(n/2).
    """
    n = check_length(n)
    if alpha is not None:
        alpha = check_alpha(alpha)
    levels = int(math.log2(n))
    log2_mag = n * levels / 2
    phase = (n // 4) * (math.pi / 2)
    for i in range(levels - 2):
        m = n >> i
        rep = 1 << i
        tw = twiddle_diagonal(m, alpha)
        log2_mag += rep * tw.log2_abs_det()
        # det A_M = (-2)^(M/2), det B_M = permutation sign
        sign_a = math.pi if (m // 2) % 2 else 0.0
        sign_b = 0.0 if decimation_permutation(m).sign() > 0 else math.pi
        phase += rep * _wrap(sign_a + sign_b + tw.arg_det())
    return Determinant(log2_mag, _wrap(phase))


def lu_determinant(m) -> Determinant:
    """Determinant of a dense matrix from its LU factorization."""
    m = np.asarray(m, dtype=complex)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", linalg.LinAlgWarning)
        lu, piv = linalg.lu_factor(m)
    d = np.diag(lu)
    if np.any(d == 0):
        return Determinant(-math.inf, 0.0)
    swaps = int(np.sum(piv != np.arange(len(piv))))
    phase = float(np.sum(np.angle(d))) + (math.pi if swaps % 2 else 0.0)
    return Determinant(float(np.sum(np.log2(np.abs(d)))), _wrap(phase))


@dataclass(frozen=True)
class ComplexityReport:
    complex_additions: int
    real_additions: int
    bit_shifts: int
    nontrivial_real_multiplications: int

    def as_dict(self) -> dict:
        return {
            "complex_additions": self.complex_additions,
            "real_additions": self.real_additions,
            "bit_shifts": self.bit_shifts,
            "nontrivial_real_multiplications": self.nontrivial_real_multiplications,
        }


def _twiddle_cost(p: int, q: int, alpha: int) -> tuple[int, int, int]:
    """Adds, shifts and general multiplications for one product by (p + qj)/alpha.

    Each output component is (p*u -/+ q*v)/alpha.  After removing the
    common power-of-two factor, an integer product by |m| costs
    popcount(m) - 1 adds and one shift per set bit above bit 0, the two
    products are combined by one add, and the remaining division by the
    reduced denominator is one shift.
    """
    g = math.gcd(math.gcd(abs(p), abs(q)), alpha)
    p, q, den = p // g, q // g, alpha // g
    adds = shifts = mults = 0
    for c in (p, q):
        if c:
            a = abs(c)
            ones = bin(a).count("1")
            adds += ones - 1
            shifts += ones - (a & 1)
            mults += 1 if a & (a - 1) else 0
    if p and q:
        adds += 1
    if den > 1:
        shifts += 1
    return 2 * adds, 2 * shifts, 2 * mults


def count_complexity(n: int, alpha: int) -> ComplexityReport:
    """Operation counts for one application of F~_n(alpha).

    Every twiddle occurrence is counted: the length-m stage is replicated
    n/m times.  Twiddles in {1, -1, j, -j} cost nothing.
    """
    n = check_length(n)
    alpha = check_alpha(alpha)
    complex_adds = n * int(math.log2(n))
    adds = shifts = mults = 0
    m = 8
    while m <= n:
        tw = approx_twiddle_diagonal(m, alpha)
        reps = n // m
        h = m // 2
        for p, q in zip(tw.re_num[h:].tolist(), tw.im_num[h:].tolist()):
            a, s, mu = _twiddle_cost(p, q, alpha)
            adds += reps * a
            shifts += reps * s
            mults += reps * mu
        m *= 2
    return ComplexityReport(complex_adds, 2 * complex_adds + adds, shifts, mults)


def write_matrix_csv(m, path: str | os.PathLike | None = None) -> str:
    """Write a matrix as ``row,col,re,im`` CSV with 17 significant digits.

    Returns the CSV text; when ``path`` is given the file is written
    atomically.
    """
    m = np.asarray(m, dtype=complex)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["row", "col", "re", "im"])
    rows, cols = m.shape
    for r in range(rows):
        for c in range(cols):
            v = m[r, c]
            w.writerow([r, c, f"{v.real:.17g}", f"{v.imag:.17g}"])
    text = buf.getvalue()
    if path is not None:
        atomic_write_text(path, text)
    return text


def read_matrix_csv(source: str | os.PathLike | Iterable[str]) -> np.ndarray:
    """Read a matrix written by :func:`write_matrix_csv` (path or lines)."""
    if isinstance(source, (str, os.PathLike)):
        lines = Path(source).read_text().splitlines()
    else:
        lines = list(source)
    reader = csv.DictReader(lines)
    if reader.fieldnames != ["row", "col", "re", "im"]:
        raise ValueError("matrix CSV must have header row,col,re,im")
    recs = [(int(r["row"]), int(r["col"]), float(r["re"]), float(r["im"])) for r in reader]
    if not recs:
        raise ValueError("matrix CSV is empty")
    rows = max(r[0] for r in recs) + 1
    cols = max(r[1] for r in recs) + 1
    out = np.zeros((rows, cols), dtype=complex)
    for r, c, re, im in recs:
        out[r, c] = complex(re, im)
    return out


def atomic_write_text(path: str | os.PathLike, text: str) -> None:
    """Write text to ``path`` through a temporary file and rename."""
    path = Path(path)
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    try:
        tmp.write_text(text)
        os.replace(tmp, path)
    finally:
        if tmp.exists():
            tmp.unlink()
