"""Flat float64 parameter vectors and the small amount of algebra the rest
of the package needs.

A ``ParamVector`` is a 1-D ``numpy.ndarray`` of dtype float64 with at least
one entry, all finite. Functions here never mutate their inputs.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, NonFiniteResult

ParamVector = np.ndarray


def as_vector(values) -> ParamVector:
    """Copy ``values`` into a validated float64 ParamVector."""
    v = np.array(values, dtype=np.float64).reshape(-1)
    if v.size == 0:
        raise EmptyInput("parameter vector must have dim > 0")
    _check_finite(v)
    return v


def _check_finite(v: np.ndarray) -> np.ndarray:
    if not np.all(np.isfinite(v)):
        raise NonFiniteResult("non-finite entry in parameter vector")
    return v


def _check_same_dim(x: np.ndarray, y: np.ndarray) -> None:
    if x.shape != y.shape:
        raise DimensionMismatch(f"dims differ: {x.shape[0]} vs {y.shape[0]}")


def axpy(a: float, x: ParamVector, b: float, y: ParamVector) -> ParamVector:
    """Return ``a*x + b*y``."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_dim(x, y)
    if not (np.isfinite(a) and np.isfinite(b)):
        raise NonFiniteResult("axpy coefficients must be finite")
    with np.errstate(over="ignore", invalid="ignore"):
        out = a * x + b * y
    return _check_finite(out)


def l2_distance(x: ParamVector, y: ParamVector) -> float:
    """Euclidean distance. Exactly zero iff ``x == y`` elementwise.

    The difference is rescaled by its largest magnitude before squaring so
    that tiny nonzero gaps do not underflow to zero.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    _check_same_dim(x, y)
    with np.errstate(over="ignore", invalid="ignore"):
        diff = x - y
    _check_finite(diff)
    scale = float(np.max(np.abs(diff)))
    if scale == 0.0:
        return 0.0
    r = diff / scale
    out = scale * float(np.sqrt(np.dot(r, r)))
    if not np.isfinite(out):
        raise NonFiniteResult("distance overflowed")
    return out


def stack(models: Sequence[ParamVector]) -> np.ndarray:
    """Stack equal-dim vectors into an ``(n, d)`` array."""
    if len(models) == 0:
        raise EmptyInput("need at least one vector")
    first = np.asarray(models[0])
    for m in models[1:]:
        _check_same_dim(first, np.asarray(m))
    return np.stack([np.asarray(m, dtype=np.float64) for m in models])


def weighted_sum(weights: Sequence[float], models: Sequence[ParamVector]) -> ParamVector:
    """Sum ``w_i * x_i`` accumulating rows in ascending index order."""
    mat = stack(models)
    if len(weights) != mat.shape[0]:
        raise DimensionMismatch("one weight per vector required")
    acc = np.zeros(mat.shape[1])
    with np.errstate(over="ignore", invalid="ignore"):
        for w, row in zip(weights, mat):
            acc += w * row
    return _check_finite(acc)


def mean(models: Sequence[ParamVector]) -> ParamVector:
    """Coordinate-wise arithmetic mean."""
    mat = stack(models)
    with np.errstate(over="ignore", invalid="ignore"):
        out = mat.sum(axis=0) / mat.shape[0]
    return _check_finite(out)


def flatten(arrays: Sequence[np.ndarray]) -> ParamVector:
    """Concatenate arrays in the given order, each raveled row-major."""
    return np.concatenate([np.asarray(a, dtype=np.float64).ravel(order="C") for a in arrays])


def unflatten(vector: ParamVector, shapes: Sequence[tuple]) -> list[np.ndarray]:
    """Inverse of :func:`flatten` for the given shapes (views, no copy)."""
    vector = np.asarray(vector, dtype=np.float64)
    total = sum(int(np.prod(s)) for s in shapes)
    if vector.shape != (total,):
        raise DimensionMismatch(f"expected dim {total}, got {vector.size}")
    out = []
    offset = 0
    for s in shapes:
        n = int(np.prod(s))
        out.append(vector[offset:offset + n].reshape(s))
        offset += n
    return out
