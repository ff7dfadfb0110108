"""Credal sets given by finite vertex lists, and their uncertainty measures.

Set functions over the label lattice are stored as arrays of length ``2**K``
indexed by bitmask: class ``k`` (0-based) belongs to subset ``A`` iff bit
``k`` of ``A`` is set.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from .polytope import (
    ConvergenceError,
    OptConfig,
    OptResult,
    maximize_concave_over_hull,
    maximize_divergence_pairs,
    minimize_max_coordinate,
    minimize_over_vertices,
)
from .scoring import LogRule, ScoringRule, ZeroOneRule
from .second_order import UncertaintyReport
from .simplex import DEFAULT_TOL, LogBase, ValidationError, as_base, dedupe_rows, validate_prob_matrix

MAX_LATTICE_K = 16


class LatticeTooLargeError(ValueError):
    pass


@dataclass(frozen=True)
class CredalSet:
    """Convex hull of ``vertices`` (``V x K``); exact duplicates are merged."""

    vertices: np.ndarray

    def __post_init__(self):
        verts = validate_prob_matrix(self.vertices)
        verts, _ = dedupe_rows(verts)
        verts.setflags(write=False)
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def from_vertices(cls, vertices, tol: float = DEFAULT_TOL) -> "CredalSet":
        return cls(validate_prob_matrix(vertices, tol))

    @property
    def k(self) -> int:
        return self.vertices.shape[1]

    def __len__(self) -> int:
        return self.vertices.shape[0]


@dataclass(frozen=True)
class BoundedReport:
    au_lower: float
    au_upper: float
    eu: float
    tu_lower: float
    tu_upper: float
    loss: str = "log"
    base: LogBase = LogBase.BITS
    status: str = "ok"


class SetFunction:
    """Values on all ``2**K`` subsets, addressable by bitmask or by members."""

    def __init__(self, values: np.ndarray, k: int):
        self.values = np.asarray(values, dtype=float)
        self.k = k

    @staticmethod
    def mask(members: Iterable[int]) -> int:
        out = 0
        for c in members:
            out |= 1 << int(c)
        return out

    def __getitem__(self, subset) -> float:
        key = subset if isinstance(subset, (int, np.integer)) else self.mask(subset)
        return float(self.values[key])

    def items(self):
        for mask, value in enumerate(self.values):
            yield frozenset(c for c in range(self.k) if mask >> c & 1), float(value)


class Capacity(SetFunction):
    """Lower probability of each event."""


class MoebiusMass(SetFunction):
    pass


def _check_lattice(k: int) -> None:
    if k > MAX_LATTICE_K:
        raise LatticeTooLargeError(f"K={k} exceeds the subset-lattice limit of {MAX_LATTICE_K}")


def subset_sizes(k: int) -> np.ndarray:
    """Cardinality of every subset, indexed by bitmask."""
    return ((np.arange(2**k)[:, None] >> np.arange(k)) & 1).sum(axis=1)


def _transform(values: np.ndarray, k: int, sign: float) -> np.ndarray:
    """Zeta (``sign=+1``) or Moebius (``sign=-1``) transform over subsets."""
    arr = np.array(values, dtype=float).reshape((2,) * k)
    for axis in range(k):
        idx_hi = [slice(None)] * k
        idx_lo = [slice(None)] * k
        idx_hi[axis], idx_lo[axis] = 1, 0
        arr[tuple(idx_hi)] += sign * arr[tuple(idx_lo)]
    return arr.reshape(-1)


def capacity(credal: CredalSet) -> Capacity:
    """``nu(A) = min_theta theta(A)``; a linear functional is minimized at a vertex."""
    k = credal.k
    _check_lattice(k)
    verts = credal.vertices
    sums = np.zeros((len(verts), 2**k))
    for bit in range(k):
        lo = 1 << bit
        sums[:, lo:2 * lo] = sums[:, :lo] + verts[:, [bit]]
    nu = sums.min(axis=0)
    nu[0], nu[-1] = 0.0, 1.0
    return Capacity(np.clip(nu, 0.0, 1.0), k)


def moebius(nu: Capacity) -> MoebiusMass:
    _check_lattice(nu.k)
    return MoebiusMass(_transform(nu.values, nu.k, -1.0), nu.k)


def zeta(mass: MoebiusMass) -> Capacity:
    """Inverse of :func:`moebius`: ``nu(A) = sum_{B subset A} m(B)``."""
    return Capacity(_transform(mass.values, mass.k, +1.0), mass.k)


def generalized_hartley(credal: CredalSet, base: LogBase | str = LogBase.BITS) -> float:
    """Non-specificity ``sum_A m(A) log |A|``."""
    base = as_base(base)
    mass = moebius(capacity(credal))
    sizes = subset_sizes(credal.k)
    logs = np.log(np.maximum(sizes, 1)) * base.scale
    return float(np.clip(mass.values @ logs, 0.0, np.log(credal.k) * base.scale))


def _check(result: OptResult, what: str) -> OptResult:
    if result.status in ("max-iter", "stalled"):
        raise ConvergenceError(
            f"{what}: {result.status} after {result.iterations} iterations "
            f"(gap bound {result.gap_bound:.3g})", result)
    return result


def upper_entropy_result(credal: CredalSet, base: LogBase | str = LogBase.BITS,
                         config: OptConfig = OptConfig()) -> OptResult:
    rule = LogRule(as_base(base))
    return _check(maximize_concave_over_hull(rule.entropy, rule.entropy_gradient, credal, config),
                  "upper entropy")


def upper_entropy(credal: CredalSet, base: LogBase | str = LogBase.BITS,
                  config: OptConfig = OptConfig()) -> float:
    return upper_entropy_result(credal, base, config).value


def lower_entropy(credal: CredalSet, base: LogBase | str = LogBase.BITS) -> float:
    """Minimum vertex entropy, exact because entropy is concave."""
    rule = LogRule(as_base(base))
    return minimize_over_vertices(rule.entropy, credal).value


def disaggregation_gh(credal: CredalSet, base: LogBase | str = LogBase.BITS,
                      config: OptConfig = OptConfig()) -> UncertaintyReport:
    """Upper entropy split into non-specificity (EU) and the remainder (AU)."""
    base = as_base(base)
    tu = upper_entropy(credal, base, config)
    eu = generalized_hartley(credal, base)
    au = tu - eu
    return UncertaintyReport(au, eu, au + eu, "log", base, "gh")


def disaggregation_entropy_gap(credal: CredalSet, base: LogBase | str = LogBase.BITS,
                               config: OptConfig = OptConfig()) -> UncertaintyReport:
    """Lower entropy as AU and the upper-lower gap as EU."""
    base = as_base(base)
    tu = upper_entropy(credal, base, config)
    au = lower_entropy(credal, base)
    eu = max(tu - au, 0.0)
    return UncertaintyReport(au, eu, au + eu, "log", base, "entropy-gap")


def psr_eu_result(credal: CredalSet, rule: ScoringRule, config: OptConfig = OptConfig()) -> OptResult:
    return maximize_divergence_pairs(rule, credal, config)


def psr_eu(credal: CredalSet, rule: ScoringRule, config: OptConfig = OptConfig()) -> float:
    """Largest divergence between any two members of the credal set."""
    return psr_eu_result(credal, rule, config).value


def psr_au_bounds(credal: CredalSet, rule: ScoringRule,
                  config: OptConfig = OptConfig()) -> tuple[float, float]:
    """Infimum and supremum of the rule entropy over the hull.

    Rule entropies are concave, so the infimum is a vertex value.  The
    supremum uses Frank-Wolfe for smooth entropies and a linear program for
    the piecewise-linear zero-one entropy.
    """
    lower = minimize_over_vertices(rule.entropy, credal).value
    if len(credal) == 1:
        return lower, lower
    if isinstance(rule, ZeroOneRule):
        upper = 1.0 - minimize_max_coordinate(credal).value
    else:
        upper = _check(maximize_concave_over_hull(rule.entropy, rule.entropy_gradient, credal, config),
                       f"{rule.name} entropy").value
    return lower, max(upper, lower)


def psr_report(credal: CredalSet, rule: ScoringRule, config: OptConfig = OptConfig()) -> BoundedReport:
    lo, hi = psr_au_bounds(credal, rule, config)
    eu = psr_eu(credal, rule, config)
    base = getattr(rule, "base", LogBase.BITS)
    return BoundedReport(lo, hi, eu, lo + eu, hi + eu, rule.name, base)


__all__ = [
    "BoundedReport", "Capacity", "CredalSet", "LatticeTooLargeError", "MoebiusMass",
    "ValidationError", "capacity", "disaggregation_entropy_gap", "disaggregation_gh",
    "generalized_hartley", "lower_entropy", "moebius", "psr_au_bounds", "psr_eu",
    "psr_eu_result", "psr_report", "upper_entropy", "upper_entropy_result", "zeta",
]
