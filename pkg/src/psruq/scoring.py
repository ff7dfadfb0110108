"""Negatively oriented proper scoring rules on a finite label space.

Each rule ``l(pred, y)`` induces

* the expected loss ``L(pred, truth) = sum_y truth[y] * l(pred, y)``,
* the rule entropy ``H(theta) = L(theta, theta)``,
* the rule divergence ``D(pred, truth) = L(pred, truth) - H(truth) >= 0``.

Class indices are 0-based.  Array arguments may be stacked ``(..., K)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .simplex import LOG_FLOOR, LogBase, as_base, kl_divergence, shannon_entropy, smooth, xlogx

RULE_NAMES = ("log", "brier", "spherical", "zero-one")


class IndeterminateError(ArithmeticError):
    """An extended-real expression evaluated to ``inf - inf``."""


def ext_sub(a: float, b: float) -> float:
    if math.isinf(a) and math.isinf(b) and (a > 0) == (b > 0):
        raise IndeterminateError(f"indeterminate form {a} - {b}")
    return a - b


class LossDecomposition(NamedTuple):
    expected_loss: float
    entropy: float
    divergence: float


def _scalar(x):
    return float(x) if np.ndim(x) == 0 else x


def _norm(x: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class ScoringRule:
    """Base class; concrete rules override the vectorized closed forms."""

    name = "abstract"
    strict = True

    def loss(self, pred, y: int) -> float:
        raise NotImplementedError

    def expected_loss(self, pred, truth):
        raise NotImplementedError

    def entropy(self, theta):
        raise NotImplementedError

    def divergence(self, pred, truth):
        raise NotImplementedError

    def entropy_gradient(self, theta) -> np.ndarray | None:
        """Gradient of :meth:`entropy`, or ``None`` where it is not smooth."""
        return None

    def pairwise_divergence(self, preds, truths) -> np.ndarray:
        """Matrix ``out[m, n] = D(preds[m], truths[n])``."""
        preds = np.asarray(preds, dtype=float)
        truths = np.asarray(truths, dtype=float)
        return self.divergence(preds[:, None, :], truths[None, :, :])

    def decompose(self, pred, truth) -> LossDecomposition:
        h = float(self.entropy(truth))
        d = float(self.divergence(pred, truth))
        return LossDecomposition(h + d, h, d)


@dataclass(frozen=True)
class LogRule(ScoringRule):
    """``l(pred, y) = -log pred[y]``; divergence is ``KL(truth || pred)``.

    With ``epsilon`` set, predictions are mixed with the uniform vector
    before the logarithm, which keeps every divergence finite.
    """

    base: LogBase = LogBase.BITS
    epsilon: float | None = None

    name = "log"

    def _pred(self, pred) -> np.ndarray:
        pred = np.asarray(pred, dtype=float)
        return smooth(pred, self.epsilon) if self.epsilon else pred

    def loss(self, pred, y):
        p = self._pred(pred)[y]
        return math.inf if p <= 0.0 else -math.log(p) * self.base.scale

    def expected_loss(self, pred, truth):
        pred = self._pred(pred)
        truth = np.asarray(truth, dtype=float)
        pred, truth = np.broadcast_arrays(pred, truth)
        pos = truth > 0.0
        with np.errstate(divide="ignore"):
            logs = np.log(np.where(pos, pred, 1.0))
        out = -np.where(pos, truth * logs, 0.0).sum(axis=-1) * self.base.scale
        return _scalar(out)

    def entropy(self, theta):
        return shannon_entropy(theta, self.base)

    def divergence(self, pred, truth):
        return kl_divergence(truth, self._pred(pred), self.base)

    def entropy_gradient(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -(np.log(np.maximum(theta, LOG_FLOOR)) + 1.0) * self.base.scale

    def pairwise_divergence(self, preds, truths):
        p = self._pred(preds)
        q = np.asarray(truths, dtype=float)
        # KL(q_n || p_m) = sum q log q - q . log p, infinite when p misses q's support
        zero = p <= 0.0
        log_p = np.log(np.where(zero, 1.0, p))
        cross = q @ log_p.T
        self_term = xlogx(q).sum(axis=-1)
        out = (self_term[None, :] - cross.T) * self.base.scale
        out = np.maximum(out, 0.0)
        missed = (q > 0.0).astype(float) @ zero.T.astype(float)
        return np.where(missed.T > 0, np.inf, out)


@dataclass(frozen=True)
class BrierRule(ScoringRule):
    """Quadratic score ``sum_k ([k == y] - pred[k])**2``."""

    name = "brier"

    def loss(self, pred, y):
        pred = np.asarray(pred, dtype=float)
        onehot = np.zeros_like(pred)
        onehot[y] = 1.0
        return float(np.sum((onehot - pred) ** 2))

    def expected_loss(self, pred, truth):
        pred = np.asarray(pred, dtype=float)
        truth = np.asarray(truth, dtype=float)
        return _scalar(1.0 - 2.0 * np.sum(pred * truth, axis=-1) + np.sum(pred * pred, axis=-1))

    def entropy(self, theta):
        theta = np.asarray(theta, dtype=float)
        return _scalar(np.maximum(1.0 - np.sum(theta * theta, axis=-1), 0.0))

    def divergence(self, pred, truth):
        diff = np.asarray(pred, dtype=float) - np.asarray(truth, dtype=float)
        return _scalar(np.sum(diff * diff, axis=-1))

    def entropy_gradient(self, theta):
        return -2.0 * np.asarray(theta, dtype=float)

    def pairwise_divergence(self, preds, truths):
        p = np.asarray(preds, dtype=float)
        q = np.asarray(truths, dtype=float)
        out = (p * p).sum(-1)[:, None] + (q * q).sum(-1)[None, :] - 2.0 * (p @ q.T)
        return np.maximum(out, 0.0)


@dataclass(frozen=True)
class SphericalRule(ScoringRule):
    """``l(pred, y) = 1 - pred[y] / ||pred||_2``.

    The divergence is ``||truth|| - pred . truth / ||pred||``; the norm in
    the denominator belongs to the prediction, which is what makes
    ``D(theta, theta) = 0``.
    """

    name = "spherical"

    def loss(self, pred, y):
        pred = np.asarray(pred, dtype=float)
        return float(1.0 - pred[y] / _norm(pred))

    def expected_loss(self, pred, truth):
        pred = np.asarray(pred, dtype=float)
        truth = np.asarray(truth, dtype=float)
        return _scalar(1.0 - np.sum(pred * truth, axis=-1) / _norm(pred))

    def entropy(self, theta):
        return _scalar(1.0 - _norm(np.asarray(theta, dtype=float)))

    def divergence(self, pred, truth):
        pred = np.asarray(pred, dtype=float)
        truth = np.asarray(truth, dtype=float)
        out = _norm(truth) - np.sum(pred * truth, axis=-1) / _norm(pred)
        return _scalar(np.maximum(out, 0.0))

    def entropy_gradient(self, theta):
        theta = np.asarray(theta, dtype=float)
        return -theta / _norm(theta)[..., None]

    def pairwise_divergence(self, preds, truths):
        p = np.asarray(preds, dtype=float)
        q = np.asarray(truths, dtype=float)
        out = _norm(q)[None, :] - (p @ q.T) / _norm(p)[:, None]
        return np.maximum(out, 0.0)


@dataclass(frozen=True)
class ZeroOneRule(ScoringRule):
    """Loss 0 when ``y`` is the predicted argmax (lowest index on ties), else 1."""

    name = "zero-one"
    strict = False

    def loss(self, pred, y):
        return 0.0 if int(np.argmax(pred)) == y else 1.0

    def expected_loss(self, pred, truth):
        pred = np.asarray(pred, dtype=float)
        truth = np.asarray(truth, dtype=float)
        pred, truth = np.broadcast_arrays(pred, truth)
        hit = np.take_along_axis(truth, np.argmax(pred, axis=-1)[..., None], axis=-1)[..., 0]
        return _scalar(1.0 - hit)

    def entropy(self, theta):
        return _scalar(1.0 - np.max(np.asarray(theta, dtype=float), axis=-1))

    def divergence(self, pred, truth):
        pred = np.asarray(pred, dtype=float)
        truth = np.asarray(truth, dtype=float)
        pred, truth = np.broadcast_arrays(pred, truth)
        hit = np.take_along_axis(truth, np.argmax(pred, axis=-1)[..., None], axis=-1)[..., 0]
        return _scalar(np.max(truth, axis=-1) - hit)

    def pairwise_divergence(self, preds, truths):
        q = np.asarray(truths, dtype=float)
        picks = np.argmax(np.asarray(preds, dtype=float), axis=-1)
        return q.max(axis=-1)[None, :] - q[:, picks].T


def make_rule(name: str, base: LogBase | str = LogBase.BITS, epsilon: float | None = None) -> ScoringRule:
    """Build one of the supported rules by name.

    ``base`` and ``epsilon`` only affect the log rule.
    """
    key = name.strip().lower().replace("_", "-")
    if key in ("zeroone", "01", "0-1"):
        key = "zero-one"
    if key == "log":
        return LogRule(as_base(base), epsilon)
    if key == "brier":
        return BrierRule()
    if key == "spherical":
        return SphericalRule()
    if key == "zero-one":
        return ZeroOneRule()
    raise ValueError(f"unknown scoring rule {name!r}, try: {', '.join(RULE_NAMES)}")


def expected_loss(rule: ScoringRule, pred, truth):
    return rule.expected_loss(pred, truth)


def rule_entropy(rule: ScoringRule, theta):
    return rule.entropy(theta)


def rule_divergence(rule: ScoringRule, pred, truth):
    return rule.divergence(pred, truth)


def decompose_loss(rule: ScoringRule, pred, truth) -> LossDecomposition:
    return rule.decompose(pred, truth)
