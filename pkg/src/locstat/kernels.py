# kernels.py
# Localizing kernels on [-1, 1] and the discrete weight sequence used by
# every localized estimator.
#
# Conventions:
#   K has support [-1, 1], integrates to 1 and is nonnegative.
#   Weights on a sampling grid: w_i = (delta_N / b_N) * K(i * delta_N / b_N)
#   for i = -m_N .. m_N, so sum(w) -> 1 as delta_N / b_N -> 0.

from __future__ import annotations

from typing import Callable, Union

import numpy as np
from scipy.integrate import quad

__all__ = [
    "RECTANGULAR",
    "EPANECHNIKOV",
    "kernel_by_name",
    "kernel_eval",
    "kernel_weights",
    "validate_kernel",
]

KernelFn = Callable[[np.ndarray], np.ndarray]
KernelKind = Union[str, KernelFn]


def _rectangular(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.5, 0.0)


def _epanechnikov(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) <= 1.0, 0.75 * (1.0 - x * x), 0.0)


RECTANGULAR = "rect"
EPANECHNIKOV = "epan"

_BUILTIN = {
    "rect": _rectangular,
    "rectangular": _rectangular,
    "epan": _epanechnikov,
    "epanechnikov": _epanechnikov,
}


def validate_kernel(fn: KernelFn, tol: float = 1e-8) -> KernelFn:
    """Numerically check that a user-supplied kernel is admissible.

    Required: support contained in [-1, 1], integral 1 over [-1, 1] and
    nonnegativity.  Only the two built-in kernels skip this check.
    """
    probe = np.array([-1.5, -1.0001, 1.0001, 2.0, 17.0])
    if np.any(np.abs(np.asarray(fn(probe), dtype=float)) > tol):
        raise ValueError("kernel does not vanish outside [-1, 1]")
    xs = np.linspace(-1.0, 1.0, 4097)
    vals = np.asarray(fn(xs), dtype=float)
    if np.any(vals < -tol):
        raise ValueError("kernel takes negative values; only positive "
                         "localizing kernels are admitted")
    total, _ = quad(lambda x: float(fn(np.asarray([x]))[0]), -1.0, 1.0,
                    limit=200)
    if abs(total - 1.0) > tol:
        raise ValueError(f"kernel integral over [-1, 1] is {total!r}, not 1")
    return fn


def _resolve(kind: KernelKind) -> KernelFn:
    if callable(kind):
        return validate_kernel(kind)
    try:
        return _BUILTIN[kind]
    except KeyError:
        raise ValueError(f"unknown kernel {kind!r}; expected 'rect' or "
                         "'epan', or a callable") from None


def kernel_by_name(name: str) -> KernelFn:
    """Return the built-in kernel function registered under ``name``."""
    return _resolve(name)


def kernel_eval(kind: KernelKind, x) -> np.ndarray | float:
    """Evaluate the kernel at ``x``; zero outside [-1, 1].

    ``x`` may be a scalar or an array; non-finite entries raise.
    """
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError("kernel argument must be finite")
    out = _resolve(kind)(arr)
    if np.isscalar(x) or arr.ndim == 0:
        return float(out)
    return out


def kernel_weights(kind: KernelKind, grid) -> np.ndarray:
    """Weight sequence w_{-m_N}..w_{m_N} for a sampling grid.

    w_i = (delta_N / b_N) * K(i * delta_N / b_N).  All weights are
    nonnegative and their sum converges to 1 as delta_N / b_N -> 0.
    """
    m = grid.m_N
    ratio = grid.delta_N / grid.b_N
    idx = np.arange(-m, m + 1, dtype=float)
    return ratio * _resolve(kind)(idx * ratio)
