"""Multi-beam patterns of a DFT-fed uniform linear array.

Row i of a transform T forms beam i with array factor
P_i(psi) = |H_i(-pi sin psi)| / max_psi |H_i|, i.e. half-wavelength spacing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

__all__ = [
    "ArrayPattern",
    "BeamAngles",
    "default_grid",
    "array_pattern",
    "beam_responses",
    "beam_angles",
    "exact_beam_angles",
    "angle_deviation",
    "pattern_error",
    "pattern_csv",
    "angles_csv",
]

GRID_POINTS = 4096
GRID_STEP = 1e-3


def default_grid(points: int = GRID_POINTS) -> np.ndarray:
    """Uniform angle grid over [-pi/2, pi/2] with both ends included."""
    if points < 2:
        raise ValueError("grid needs at least two points")
    return np.linspace(-np.pi / 2, np.pi / 2, points)


def _step_grid(step: float) -> np.ndarray:
    return np.arange(-np.pi / 2, np.pi / 2 + 1e-12, step)


def beam_responses(t, psi) -> np.ndarray:
    """|H_i(-pi sin psi)| for every row i, shape (n, len(psi))."""
    t = np.asarray(t, dtype=complex)
    psi = np.asarray(psi, dtype=float)
    k = np.arange(t.shape[1])
    omega = -np.pi * np.sin(psi)
    return np.abs(t @ np.exp(-1j * np.outer(k, omega)))


@dataclass(frozen=True)
class ArrayPattern:
    n: int
    psi_grid: np.ndarray
    magnitude: np.ndarray

    @property
    def psi_deg(self) -> np.ndarray:
        return np.degrees(self.psi_grid)


def array_pattern(t, psi_grid=None) -> ArrayPattern:
    """Normalized beam patterns of every row of ``t`` over ``psi_grid`` (radians)."""
    t = np.asarray(t, dtype=complex)
    if t.ndim != 2 or t.shape[0] != t.shape[1]:
        raise ValueError("transform must be square")
    psi = default_grid() if psi_grid is None else np.asarray(psi_grid, dtype=float)
    if psi.size == 0:
        raise ValueError("angle grid is empty")
    if np.any(np.diff(psi) < 0):
        raise ValueError("angle grid must be sorted")
    mag = beam_responses(t, psi)
    peak = mag.max(axis=1, keepdims=True)
    mag = np.divide(mag, peak, out=np.zeros_like(mag), where=peak > 0)
    return ArrayPattern(t.shape[0], psi, mag)


@dataclass(frozen=True)
class BeamAngles:
    angles_deg: np.ndarray
    method: str


def beam_angles(t, *, method: str = "refined", grid_points: int = GRID_POINTS,
                grid_step: float = GRID_STEP, xtol: float = 1e-6) -> BeamAngles:
    """Pointing angle of every beam in degrees.

    ``method="refined"`` takes the argmax over a ``grid_points`` grid and
    polishes it with a bounded scalar search to ``xtol`` radians.  A peak on
    the first or last grid point is reported as that boundary angle.

    ``method="grid"`` returns the plain argmax over a grid of spacing
    ``grid_step`` radians starting at -pi/2, which quantizes angles to that
    step (1e-3 rad is about 0.0573 degrees).  Ties go to the lowest angle.
    """
    t = np.asarray(t, dtype=complex)
    if method == "grid":
        psi = _step_grid(grid_step)
        idx = np.argmax(beam_responses(t, psi), axis=1)
        return BeamAngles(np.degrees(psi[idx]), method)
    if method != "refined":
        raise ValueError(f"unknown method {method!r}")
    psi = default_grid(grid_points)
    resp = beam_responses(t, psi)
    idx = np.argmax(resp, axis=1)
    k = np.arange(t.shape[1])
    out = np.empty(t.shape[0])
    last = len(psi) - 1
    for i, g in enumerate(idx):
        if g == 0 or g == last:
            out[i] = psi[g]
            continue
        row = t[i]

        def neg(p, row=row):
            return -abs(np.exp(1j * np.pi * math.sin(p) * k) @ row)

        res = optimize.minimize_scalar(
            neg, bounds=(psi[g - 1], psi[g + 1]), method="bounded",
            options={"xatol": xtol},
        )
        out[i] = res.x if -res.fun >= resp[i, g] else psi[g]
    return BeamAngles(np.degrees(out), method)


def exact_beam_angles(n: int) -> np.ndarray:
    """Closed-form pointing angles of the exact n-point DFT beams, in degrees.

    Beam i peaks where -pi sin psi = -2 pi i / n (mod 2 pi); the Nyquist
    beam is reported at -90.
    """
    i = np.arange(n)
    s = np.where(i < n // 2, 2 * i / n, -2 * (n - i) / n)
    return np.degrees(np.arcsin(s))


def angle_deviation(exact, approx, **kw) -> np.ndarray:
    """|angle(exact beam) - angle(approximate beam)| in degrees, per beam."""
    a = beam_angles(exact, **kw).angles_deg
    b = beam_angles(approx, **kw).angles_deg
    return np.abs(a - b)


def pattern_error(exact, approx, psi_grid=None) -> np.ndarray:
    """|P_i(psi, exact) - P_i(psi, approx)| on the grid, shape (n, grid)."""
    exact = np.asarray(exact)
    approx = np.asarray(approx)
    if exact.shape != approx.shape:
        raise ValueError(f"shape mismatch: {exact.shape} vs {approx.shape}")
    return np.abs(array_pattern(exact, psi_grid).magnitude - array_pattern(approx, psi_grid).magnitude)


def pattern_csv(pattern: ArrayPattern) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beam", "psi_deg", "magnitude"])
    deg = pattern.psi_deg
    for b in range(pattern.n):
        for p, m in zip(deg, pattern.magnitude[b]):
            w.writerow([b, f"{p:.10g}", f"{m:.10g}"])
    return buf.getvalue()


def angles_csv(angles_deg, deviation_deg) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["beam", "angle_deg", "deviation_from_exact_deg"])
    for b, (a, d) in enumerate(zip(angles_deg, deviation_deg)):
        w.writerow([b, f"{a:.4f}", f"{d:.4f}"])
    return buf.getvalue()
