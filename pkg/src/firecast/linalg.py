"""Dense matrix arithmetic and activation functions.

Everything downstream works on 2-D float64 C-contiguous numpy arrays in
row-major, row-vector convention: an input vector x is 1xM and a dense
transform is y = x @ W + b.  The helpers here add the shape checking the
rest of the package relies on; numpy supplies the arithmetic.
"""
from __future__ import annotations

from enum import Enum
from typing import Literal

import numpy as np
from scipy.special import expit

from .errors import ShapeError


def matrix(data) -> np.ndarray:
    """Coerce `data` to a valid matrix: 2-D float64, at least 1x1."""
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim != 2:
        raise ShapeError(f"matrix must be 2-D, got shape {a.shape}")
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError(f"matrix must be at least 1x1, got shape {a.shape}")
    return a


class Activation(Enum):
    SIGMOID = "sigmoid"
    TANH = "tanh"
    RELU = "relu"
    LINEAR = "linear"


def matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Matrix product; raises ShapeError naming both shapes on mismatch."""
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul shape mismatch: {a.shape} x {b.shape}")
    return a @ b


def ew(a: np.ndarray, b: np.ndarray, op: Literal["add", "sub", "mul"]) -> np.ndarray:
    """Elementwise add/sub/mul of two same-shape matrices."""
    if a.shape != b.shape:
        raise ShapeError(f"elementwise shape mismatch: {a.shape} vs {b.shape}")
    if op == "add":
        return a + b
    if op == "sub":
        return a - b
    if op == "mul":
        return a * b
    raise ValueError(f"unknown elementwise op {op!r}")


def apply(a: np.ndarray, f: Activation) -> np.ndarray:
    """Entrywise activation; LINEAR returns the input unchanged."""
    if f is Activation.SIGMOID:
        return expit(a)
    if f is Activation.TANH:
        return np.tanh(a)
    if f is Activation.RELU:
        return np.maximum(a, 0.0)
    if f is Activation.LINEAR:
        return a
    raise ValueError(f"unknown activation {f!r}")


def apply_deriv(pre_activation: np.ndarray, f: Activation) -> np.ndarray:
    """Entrywise derivative evaluated at the pre-activation values.

    RELU's derivative at exactly 0 is taken as 0; LINEAR's is 1.
    """
    x = pre_activation
    if f is Activation.SIGMOID:
        s = expit(x)
        return s * (1.0 - s)
    if f is Activation.TANH:
        t = np.tanh(x)
        return 1.0 - t * t
    if f is Activation.RELU:
        return np.where(x > 0.0, 1.0, 0.0)
    if f is Activation.LINEAR:
        return np.ones_like(x)
    raise ValueError(f"unknown activation {f!r}")
