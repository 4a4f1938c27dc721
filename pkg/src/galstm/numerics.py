"""Activations and shape-checked dense ops.

Arrays are plain float64 numpy arrays (row-major); these wrappers add the
dimension checks and the overflow-safe activation forms the model relies
on. The batched training path lives in ``kernels``; these functions back
the single-step reference cell and the tests.
"""

from __future__ import annotations

import numpy as np

from .errors import ShapeError


def sigmoid(x):
    """Logistic function, stable for any finite |x| (no overflow)."""
    x = np.asarray(x, dtype=np.float64)
    e = np.exp(-np.abs(x))
    out = np.where(x >= 0.0, 1.0 / (1.0 + e), e / (1.0 + e))
    return float(out) if out.ndim == 0 else out


def tanh_act(x):
    """Hyperbolic tangent in (-1, 1)."""
    out = np.tanh(np.asarray(x, dtype=np.float64))
    return float(out) if out.ndim == 0 else out


def as_matrix(m) -> np.ndarray:
    m = np.ascontiguousarray(m, dtype=np.float64)
    if m.ndim != 2 or m.shape[0] < 1 or m.shape[1] < 1:
        raise ShapeError(f"expected a 2-d matrix, got shape {m.shape}")
    return m


def as_vector(v) -> np.ndarray:
    v = np.ascontiguousarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] < 1:
        raise ShapeError(f"expected a 1-d vector, got shape {v.shape}")
    return v


def matvec(m, v) -> np.ndarray:
    m, v = as_matrix(m), as_vector(v)
    if m.shape[1] != v.shape[0]:
        raise ShapeError(f"matvec {m.shape} x {v.shape}: inner dimensions differ")
    return m @ v


def add(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"add {a.shape} + {b.shape}: shapes differ")
    return a + b


def hadamard(a, b) -> np.ndarray:
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise ShapeError(f"hadamard {a.shape} * {b.shape}: shapes differ")
    return a * b


def outer(a, b) -> np.ndarray:
    return np.outer(as_vector(a), as_vector(b))


def smul(scalar: float, a) -> np.ndarray:
    return float(scalar) * np.asarray(a, dtype=np.float64)


def require_finite(name: str, a) -> np.ndarray:
    """Raise NumericError naming the offending quantity if a is not finite."""
    a = np.asarray(a)
    if not np.all(np.isfinite(a)):
        from .errors import NumericError

        raise NumericError(f"non-finite value in {name}")
    return a
