"""Exact truncated multivariate Laurent series and matrices of them."""

from ._backend import BACKEND
from .matseries import (
    MatSeries,
    const_det,
    const_inverse,
    mat_det,
    mat_equal_on_window,
    mat_invert,
    mat_mul,
)
from .multiseries import (
    EXACT,
    MultiSeries,
    VarSpec,
    add,
    base_derivative,
    binom_power,
    derivative,
    eval_numeric,
    exp_series,
    invert,
    is_exact,
    log_series,
    mul,
    power,
    substitute,
)
from .scalar import I, ONE, ZERO, Scalar

__all__ = [
    "BACKEND",
    "EXACT",
    "I",
    "ONE",
    "ZERO",
    "MatSeries",
    "MultiSeries",
    "Scalar",
    "VarSpec",
    "add",
    "base_derivative",
    "binom_power",
    "const_det",
    "const_inverse",
    "derivative",
    "eval_numeric",
    "exp_series",
    "invert",
    "is_exact",
    "log_series",
    "mat_det",
    "mat_equal_on_window",
    "mat_invert",
    "mat_mul",
    "mul",
    "power",
    "substitute",
]
