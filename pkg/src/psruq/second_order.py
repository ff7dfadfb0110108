"""Second-order beliefs: weighted ensembles of probability vectors.

Expectations over the belief are computed exactly over the ensemble.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .scoring import LogRule, ScoringRule
from .simplex import (
    DEFAULT_TOL,
    LogBase,
    ValidationError,
    as_base,
    shannon_entropy,
    validate_prob_matrix,
)

MAX_MEMBERS = 5000


@dataclass(frozen=True)
class UncertaintyReport:
    au: float
    eu: float
    tu: float
    loss: str = "log"
    base: LogBase = LogBase.BITS
    method: str = "psr"


@dataclass(frozen=True)
class EnsembleBelief:
    """A discrete second-order distribution: members ``(M, K)`` with weights."""

    members: np.ndarray
    weights: np.ndarray = field(default=None)

    def __post_init__(self):
        members = validate_prob_matrix(self.members)
        m = members.shape[0]
        if self.weights is None:
            weights = np.full(m, 1.0 / m)
        else:
            weights = np.asarray(self.weights, dtype=float)
            if weights.shape != (m,):
                raise ValidationError(f"expected {m} weights, got {weights.size}")
            if np.any(~np.isfinite(weights)) or np.any(weights < 0.0):
                raise ValidationError("weights must be finite and nonnegative")
            if abs(weights.sum() - 1.0) > DEFAULT_TOL:
                raise ValidationError(f"weights sum to {weights.sum():.12g}, not 1")
            weights = weights / weights.sum()
        weights.setflags(write=False)
        object.__setattr__(self, "members", members)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def from_members(cls, members, weights=None, tol: float = DEFAULT_TOL) -> "EnsembleBelief":
        """Validate with a custom tolerance before construction."""
        return cls(validate_prob_matrix(members, tol), weights)

    @property
    def k(self) -> int:
        return self.members.shape[1]

    def __len__(self) -> int:
        return self.members.shape[0]


@dataclass(frozen=True)
class DirichletBelief:
    alpha: np.ndarray

    def __post_init__(self):
        alpha = np.asarray(self.alpha, dtype=float)
        if alpha.ndim != 1 or alpha.size < 2:
            raise ValidationError("alpha needs at least 2 concentration parameters")
        if np.any(~np.isfinite(alpha)) or np.any(alpha <= 0.0):
            raise ValidationError("alpha entries must be positive and finite")
        alpha.setflags(write=False)
        object.__setattr__(self, "alpha", alpha)


def bma(belief: EnsembleBelief) -> np.ndarray:
    """Bayesian model average (weighted mean member)."""
    mean = belief.weights @ belief.members
    return mean / mean.sum()


def classic_decomposition(belief: EnsembleBelief, base: LogBase | str = LogBase.BITS) -> UncertaintyReport:
    """Entropy of the mean, expected entropy, and their gap (mutual information)."""
    base = as_base(base)
    tu = shannon_entropy(bma(belief), base)
    au = float(belief.weights @ shannon_entropy(belief.members, base))
    eu = max(tu - au, 0.0)
    return UncertaintyReport(au, eu, au + eu, "log", base, "classic")


def classic_psr_bridge(belief: EnsembleBelief, base: LogBase | str = LogBase.BITS) -> UncertaintyReport:
    """The mutual-information decomposition written with log-loss terms.

    The agent predicts the mean ``theta_bar``; EU is the expected KL from each
    member to the mean and TU the expected cross-entropy of the mean.
    """
    rule = LogRule(as_base(base))
    mean = bma(belief)
    w = belief.weights
    au = float(w @ rule.entropy(belief.members))
    eu = float(w @ rule.divergence(mean, belief.members))
    tu = float(w @ rule.expected_loss(mean, belief.members))
    return UncertaintyReport(au, eu, tu, "log", rule.base, "classic-psr")


def _member_labels(members: np.ndarray) -> np.ndarray:
    _, labels = np.unique(members, axis=0, return_inverse=True)
    return labels.reshape(-1)


def expected_pairwise_divergence(members, weights, rule: ScoringRule, block: int = 1024) -> float:
    """``sum_{m,n} w_m w_n D(members[m], members[n])``, in fixed row blocks.

    Pairs of identical members contribute exactly zero; zero-weight members
    are dropped so that ``0 * inf`` never arises.
    """
    live = weights > 0.0
    members, weights = members[live], weights[live]
    labels = _member_labels(members)
    total = 0.0
    for start in range(0, len(members), block):
        rows = slice(start, start + block)
        div = rule.pairwise_divergence(members[rows], members)
        div[labels[rows, None] == labels[None, :]] = 0.0
        if np.isinf(div).any():
            return float("inf")
        total += float(weights[rows] @ div @ weights)
    return total


def psr_decomposition(
    belief: EnsembleBelief, rule: ScoringRule, max_members: int = MAX_MEMBERS
) -> UncertaintyReport:
    """Scoring-rule decomposition for an agent that predicts at random from its belief.

    EU is the expected divergence over ordered pairs (prediction, truth),
    both drawn from the belief, diagonal included.  AU is the expected rule
    entropy, and TU their sum.
    """
    members, w = belief.members, belief.weights
    if len(members) > max_members:
        raise ValueError(f"{len(members)} members exceeds the pairwise cap of {max_members}")
    au = float(w @ rule.entropy(members))
    eu = expected_pairwise_divergence(members, w, rule)
    base = getattr(rule, "base", LogBase.BITS)
    return UncertaintyReport(au, eu, au + eu, rule.name, base, "psr")


def probabilistic_report(theta, rule: ScoringRule, method: str = "psr") -> UncertaintyReport:
    """A single first-order prediction carries aleatoric uncertainty only."""
    au = float(rule.entropy(theta))
    base = getattr(rule, "base", LogBase.BITS)
    return UncertaintyReport(au, 0.0, au, rule.name, base, method)


def sample_dirichlet(belief: DirichletBelief, m: int, seed: int | None = None) -> EnsembleBelief:
    """Draw ``m`` members from ``Dirichlet(alpha)`` with uniform weights."""
    if m < 1:
        raise ValueError("need at least one sample")
    rng = np.random.default_rng(seed)
    draws = rng.dirichlet(belief.alpha, size=m)
    return EnsembleBelief(draws / draws.sum(axis=1, keepdims=True))
