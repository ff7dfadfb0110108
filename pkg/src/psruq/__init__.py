"""Aleatoric, epistemic and total uncertainty for probabilistic, Bayesian
and credal (Levi) agents, from entropy measures and proper scoring rules."""

from .credal import (
    BoundedReport,
    Capacity,
    CredalSet,
    MoebiusMass,
    capacity,
    disaggregation_entropy_gap,
    disaggregation_gh,
    generalized_hartley,
    lower_entropy,
    moebius,
    psr_au_bounds,
    psr_eu,
    psr_report,
    upper_entropy,
    zeta,
)
from .scoring import (
    LossDecomposition,
    ScoringRule,
    decompose_loss,
    expected_loss,
    make_rule,
    rule_divergence,
    rule_entropy,
)
from .second_order import (
    DirichletBelief,
    EnsembleBelief,
    UncertaintyReport,
    bma,
    classic_decomposition,
    classic_psr_bridge,
    probabilistic_report,
    psr_decomposition,
    sample_dirichlet,
)
from .simplex import LogBase, ValidationError, hartley, kl_divergence, shannon_entropy, validate_prob_vec

__version__ = "0.1.0"
