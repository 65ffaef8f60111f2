"""Dense float64 array helpers shared by the rest of the library.

All numeric data in this library is carried by C-contiguous float64
numpy arrays.  The functions here are thin, contract-enforcing wrappers:
they validate shapes and finiteness and raise errors that name the
offending shapes.  None of them mutate their inputs; every caller can
treat arrays produced here as immutable.
"""

import numpy as np

__all__ = [
    "tensor",
    "validate",
    "add",
    "sub",
    "mul",
    "scale",
    "clamp",
    "sign",
    "absolute",
    "norm",
    "matmul",
]


def tensor(data, copy=True):
    """Build a C-contiguous float64 array and reject non-finite values."""
    arr = np.array(data, dtype=np.float64, copy=copy, order="C")
    return validate(arr)


def validate(x):
    """Raise ValueError if ``x`` contains NaN or Inf; return ``x`` unchanged."""
    x = np.asarray(x, dtype=np.float64)
    if not np.isfinite(x).all():
        bad = int(np.size(x) - np.isfinite(x).sum())
        raise ValueError(f"array of shape {x.shape} contains {bad} non-finite element(s)")
    return x


def _check_same_shape(a, b, op):
    if a.shape != b.shape:
        raise ValueError(f"{op}: shape mismatch {a.shape} vs {b.shape}")


def add(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, "add")
    return a + b


def sub(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, "sub")
    return a - b


def mul(a, b):
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    _check_same_shape(a, b, "mul")
    return a * b


def scale(a, c):
    """Multiply every element of ``a`` by the scalar ``c``."""
    return np.asarray(a, dtype=np.float64) * float(c)


def clamp(x, lo, hi):
    """Elementwise clamp into [lo, hi]."""
    if lo > hi:
        raise ValueError(f"clamp: lo {lo} exceeds hi {hi}")
    return np.clip(np.asarray(x, dtype=np.float64), lo, hi)


def sign(x):
    """Elementwise sign, mapping into {-1, 0, +1}."""
    return np.sign(np.asarray(x, dtype=np.float64))


def absolute(x):
    return np.abs(np.asarray(x, dtype=np.float64))


def norm(x, p="l2"):
    """Vector norm of the flattened array: ``p`` is 'l2' or 'linf'."""
    x = np.asarray(x, dtype=np.float64)
    if p == "l2":
        return float(np.sqrt(np.sum(x * x)))
    if p == "linf":
        if x.size == 0:
            return 0.0
        return float(np.max(np.abs(x)))
    raise ValueError(f"unknown norm {p!r}; expected 'l2' or 'linf'")


def matmul(a, b):
    """Matrix product of two 2-d arrays with an inner-dimension check."""
    a, b = np.asarray(a, dtype=np.float64), np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or b.ndim != 2:
        raise ValueError(f"matmul: expected 2-d operands, got {a.shape} and {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ValueError(f"matmul: inner dimensions disagree, {a.shape} vs {b.shape}")
    return a @ b
