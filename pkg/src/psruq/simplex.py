"""Probability vectors on the simplex and the classical point measures.

A probability vector is stored as a read-only 1-D ``numpy`` array of length
K >= 2.  Most functions here also accept stacked arrays of shape ``(..., K)``
and reduce over the last axis.
"""

from __future__ import annotations

import enum
import math
from typing import Iterable

import numpy as np

DEFAULT_TOL = 1e-9
LOG_FLOOR = 1e-300


class ValidationError(ValueError):
    """Raised when an input cannot be read as a probability vector."""


class LogBase(str, enum.Enum):
    BITS = "bits"
    NATS = "nats"

    @property
    def scale(self) -> float:
        """Factor turning a natural log into a log in this base."""
        return 1.0 / math.log(2.0) if self is LogBase.BITS else 1.0


def as_base(base: LogBase | str) -> LogBase:
    try:
        return LogBase(base)
    except ValueError:
        raise ValueError(f"unknown log base {base!r}, use 'bits' or 'nats'") from None


def validate_prob_vec(raw: Iterable[float], tol: float = DEFAULT_TOL) -> np.ndarray:
    """Check and normalize a candidate probability vector.

    Entries in ``[-tol, 0)`` are clamped to zero; the sum must then lie
    within ``tol`` of one, and the result is rescaled to sum to one.
    """
    theta = np.array(list(raw) if not isinstance(raw, np.ndarray) else raw, dtype=float)
    if theta.ndim != 1 or theta.size == 0:
        raise ValidationError("probability vector must be a nonempty 1-D sequence")
    if theta.size < 2:
        raise ValidationError(f"need at least 2 classes, got K={theta.size}")
    if not np.all(np.isfinite(theta)):
        raise ValidationError("probability vector contains non-finite entries")
    if np.any(theta < -tol):
        k = int(np.argmin(theta))
        raise ValidationError(f"entry {k} is negative ({theta[k]:.3g})")
    theta = np.where(theta < 0.0, 0.0, theta)
    total = theta.sum()
    if abs(total - 1.0) > tol:
        raise ValidationError(f"entries sum to {total:.12g}, not 1")
    theta = theta / total
    theta.setflags(write=False)
    return theta


def validate_prob_matrix(raw, tol: float = DEFAULT_TOL) -> np.ndarray:
    """Row-wise :func:`validate_prob_vec` for an ``(N, K)`` array."""
    try:
        arr = np.array(raw, dtype=float)
    except ValueError:
        raise ValidationError("probability vectors must all have the same length") from None
    if arr.ndim != 2 or arr.shape[0] == 0:
        raise ValidationError("expected a nonempty list of probability vectors")
    if arr.shape[1] < 2:
        raise ValidationError(f"need at least 2 classes, got K={arr.shape[1]}")
    bad = ~np.all(np.isfinite(arr), axis=1) | np.any(arr < -tol, axis=1)
    arr = np.where(arr < 0.0, 0.0, arr)
    totals = arr.sum(axis=1)
    bad |= ~(np.abs(totals - 1.0) <= tol)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        try:
            validate_prob_vec(np.asarray(raw, dtype=float)[i], tol)
        except ValidationError as exc:
            raise ValidationError(f"row {i}: {exc}") from None
    out = arr / totals[:, None]
    out.setflags(write=False)
    return out


def uniform(k: int) -> np.ndarray:
    return np.full(k, 1.0 / k)


def xlogx(x: np.ndarray) -> np.ndarray:
    """Elementwise ``x * ln(x)`` with ``0 ln 0 = 0``."""
    x = np.asarray(x, dtype=float)
    return x * np.log(np.where(x > 0.0, x, 1.0))


def shannon_entropy(theta, base: LogBase | str = LogBase.BITS) -> np.ndarray | float:
    theta = np.asarray(theta, dtype=float)
    h = -xlogx(theta).sum(axis=-1) * as_base(base).scale
    # -0.0 and tiny negatives from rounding
    h = np.maximum(h, 0.0)
    return float(h) if np.ndim(h) == 0 else h


def hartley(subset: Iterable[int] | int, base: LogBase | str = LogBase.BITS) -> float:
    """Hartley measure ``log |A|``; ``subset`` may be a collection or its size."""
    size = subset if isinstance(subset, (int, np.integer)) else len(set(subset))
    if size < 1:
        raise ValueError("Hartley measure is undefined for the empty set")
    return math.log(size) * as_base(base).scale


def kl_divergence(theta, theta_hat, base: LogBase | str = LogBase.BITS) -> np.ndarray | float:
    """``KL(theta || theta_hat)``, ``+inf`` when ``theta_hat`` misses support."""
    p = np.asarray(theta, dtype=float)
    q = np.asarray(theta_hat, dtype=float)
    if p.shape[-1] != q.shape[-1]:
        raise ValueError(f"class counts differ: {p.shape[-1]} vs {q.shape[-1]}")
    p, q = np.broadcast_arrays(p, q)
    pos = p > 0.0
    with np.errstate(divide="ignore"):
        ratio = np.log(np.where(pos, p, 1.0)) - np.log(np.where(pos, q, 1.0))
    terms = np.where(pos, p * ratio, 0.0)
    kl = terms.sum(axis=-1) * as_base(base).scale
    kl = np.where(np.isinf(kl), np.inf, np.maximum(kl, 0.0))
    return float(kl) if np.ndim(kl) == 0 else kl


def smooth(theta_hat, epsilon: float) -> np.ndarray:
    """Mix a prediction with the uniform vector: ``(1 - K eps) theta + eps``."""
    q = np.asarray(theta_hat, dtype=float)
    k = q.shape[-1]
    if not 0.0 <= epsilon * k < 1.0:
        raise ValueError(f"epsilon must lie in [0, 1/K), got {epsilon}")
    return (1.0 - k * epsilon) * q + epsilon


def dedupe_rows(rows: np.ndarray, weights: np.ndarray | None = None, atol: float = 1e-12):
    """Merge rows equal within ``atol`` (max-norm), summing their weights.

    First occurrences keep their order.
    """
    rows = np.asarray(rows, dtype=float)
    n = rows.shape[0]
    w = np.full(n, 1.0 / n) if weights is None else np.asarray(weights, dtype=float)
    keep: list[int] = []
    merged: list[float] = []
    for i in range(n):
        if keep:
            dist = np.max(np.abs(rows[keep] - rows[i]), axis=1)
            j = int(np.argmin(dist))
            if dist[j] <= atol:
                merged[j] += w[i]
                continue
        keep.append(i)
        merged.append(w[i])
    return rows[keep], np.array(merged)
