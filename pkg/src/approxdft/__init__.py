"""Multiplierless approximate DFTs built from scaled-rounded twiddle factors."""

from approxdft.transform import (
    ComplexityReport,
    Determinant,
    FactoredTransform,
    apply,
    apply_inverse,
    approx_twiddle_diagonal,
    build_approx_dft,
    build_exact_dft,
    compile_factored,
    count_complexity,
    determinant_closed_form,
    exact_twiddle_diagonal,
    scaled_round,
    scaled_round_complex,
)

__version__ = "0.1.0"
