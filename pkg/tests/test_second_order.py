import math
from itertools import product

import numpy as np
import pytest

from psruq.scoring import make_rule, rule_divergence, rule_entropy
from psruq.second_order import (
    DirichletBelief,
    EnsembleBelief,
    bma,
    classic_decomposition,
    classic_psr_bridge,
    expected_pairwise_divergence,
    probabilistic_report,
    psr_decomposition,
    sample_dirichlet,
)
from psruq.simplex import ValidationError, shannon_entropy

from conftest import RULES, random_simplex, sparse_simplex

S_09 = -(0.9 * math.log2(0.9) + 0.1 * math.log2(0.1))
S_07 = -(0.7 * math.log2(0.7) + 0.3 * math.log2(0.3))


def pairwise_oracle(rule, members, weights):
    """Plain double loop over ordered pairs, diagonal included."""
    total = 0.0
    for (m, wm), (n, wn) in product(enumerate(weights), repeat=2):
        if wm == 0 or wn == 0 or np.array_equal(members[m], members[n]):
            continue
        d = rule_divergence(rule, members[m], members[n])
        if math.isinf(d):
            return math.inf
        total += wm * wn * d
    return total


def random_ensemble(rng, m, k, sparse=False):
    draw = (lambda: sparse_simplex(rng, k)) if sparse else (lambda: random_simplex(rng, k))
    members = np.stack([draw() for _ in range(m)])
    return EnsembleBelief(members, rng.dirichlet(np.ones(m)))


class TestBelief:
    def test_weights_must_sum_to_one(self):
        with pytest.raises(ValidationError, match="sum"):
            EnsembleBelief([[0.9, 0.1]], [0.5])

    def test_weight_count(self):
        with pytest.raises(ValidationError):
            EnsembleBelief([[0.9, 0.1], [0.5, 0.5]], [1.0])

    def test_default_uniform(self):
        np.testing.assert_array_equal(EnsembleBelief([[1, 0], [0, 1]]).weights, [0.5, 0.5])

    def test_member_error_names_row(self):
        with pytest.raises(ValidationError, match="row 1"):
            EnsembleBelief([[0.5, 0.5], [0.5, 0.3]])

    @pytest.mark.parametrize("alpha", [[1.0], [1.0, 0.0], [1.0, -2.0], [np.inf, 1.0]])
    def test_dirichlet_alpha(self, alpha):
        with pytest.raises(ValidationError):
            DirichletBelief(alpha)


class TestBma:
    def test_single(self):
        np.testing.assert_allclose(bma(EnsembleBelief([[0.3, 0.7]])), [0.3, 0.7])

    def test_symmetric(self):
        np.testing.assert_allclose(bma(EnsembleBelief([[1, 0], [0, 1]])), [0.5, 0.5])

    def test_weighted(self):
        np.testing.assert_allclose(bma(EnsembleBelief([[0.8, 0.2], [0.4, 0.6]], [0.25, 0.75])), [0.5, 0.5])


class TestClassic:
    def test_single_member(self):
        r = classic_decomposition(EnsembleBelief([[0.9, 0.1]]))
        assert (r.au, r.eu, r.tu) == pytest.approx((S_09, 0.0, S_09), abs=1e-12)

    def test_degenerate_members(self):
        r = classic_decomposition(EnsembleBelief([[1, 0], [0, 1]]))
        assert (r.tu, r.au, r.eu) == pytest.approx((1.0, 0.0, 1.0), abs=1e-12)

    def test_derived(self):
        r = classic_decomposition(EnsembleBelief([[0.9, 0.1], [0.5, 0.5]]))
        assert r.au == pytest.approx((S_09 + 1) / 2, abs=1e-12)
        assert r.tu == pytest.approx(S_07, abs=1e-12)
        assert r.eu == pytest.approx(S_07 - (S_09 + 1) / 2, abs=1e-12)
        assert (r.au, r.tu, r.eu) == pytest.approx((0.734498, 0.881291, 0.146793), abs=1e-6)

    def test_bridge_examples(self):
        assert classic_psr_bridge(EnsembleBelief([[0.3, 0.7]])).eu == pytest.approx(0.0, abs=1e-15)
        assert classic_psr_bridge(EnsembleBelief([[0.9, 0.1], [0.5, 0.5]])).eu == pytest.approx(0.146793, abs=1e-6)
        assert classic_psr_bridge(EnsembleBelief([[1, 0], [0, 1]])).eu == pytest.approx(1.0, abs=1e-12)

    def test_bridge_matches_mutual_information(self, rng):
        for _ in range(300):
            b = random_ensemble(rng, int(rng.integers(1, 11)), int(rng.integers(2, 9)), sparse=True)
            classic, bridge = classic_decomposition(b), classic_psr_bridge(b)
            assert bridge.eu == pytest.approx(classic.eu, abs=1e-10)
            assert bridge.tu == pytest.approx(classic.tu, abs=1e-10)
            assert bridge.tu == pytest.approx(bridge.au + bridge.eu, abs=1e-10)

    def test_nats(self):
        b = EnsembleBelief([[0.9, 0.1], [0.5, 0.5]])
        assert classic_decomposition(b, "nats").eu == pytest.approx(classic_decomposition(b).eu * math.log(2))


class TestPsr:
    @pytest.mark.parametrize("name", RULES)
    def test_single_member(self, name):
        rule = make_rule(name)
        r = psr_decomposition(EnsembleBelief([[0.2, 0.5, 0.3]]), rule)
        h = rule_entropy(rule, [0.2, 0.5, 0.3])
        assert (r.au, r.eu, r.tu) == pytest.approx((h, 0.0, h), abs=1e-15)

    def test_brier_enumeration(self):
        r = psr_decomposition(EnsembleBelief([[1, 0], [0, 1]]), make_rule("brier"))
        assert (r.au, r.eu, r.tu) == (0.0, 1.0, 1.0)

    def test_log_disjoint(self):
        r = psr_decomposition(EnsembleBelief([[1, 0], [0, 1]]), make_rule("log"))
        assert math.isinf(r.eu) and math.isinf(r.tu) and r.au == 0.0

    def test_log_smoothing_makes_finite(self):
        r = psr_decomposition(EnsembleBelief([[1, 0], [0, 1]]), make_rule("log", epsilon=1e-10))
        assert math.isfinite(r.eu)

    @pytest.mark.parametrize("name", RULES)
    def test_matches_double_loop(self, name, rng):
        rule = make_rule(name)
        for _ in range(40):
            b = random_ensemble(rng, int(rng.integers(1, 7)), int(rng.integers(2, 6)), sparse=True)
            eu = psr_decomposition(b, rule).eu
            ref = pairwise_oracle(rule, b.members, b.weights)
            assert (math.isinf(eu) and math.isinf(ref)) or eu == pytest.approx(ref, abs=1e-12)

    @pytest.mark.parametrize("name", RULES)
    def test_duplication_and_permutation_invariance(self, name, rng):
        rule = make_rule(name)
        for _ in range(30):
            b = random_ensemble(rng, int(rng.integers(2, 6)), 4)
            base = psr_decomposition(b, rule)
            perm = rng.permutation(len(b))
            permuted = psr_decomposition(EnsembleBelief(b.members[perm], b.weights[perm]), rule)
            doubled = psr_decomposition(
                EnsembleBelief(np.vstack([b.members, b.members]), np.concatenate([b.weights, b.weights]) / 2), rule)
            for other in (permuted, doubled):
                assert other.au == pytest.approx(base.au, abs=1e-12)
                assert other.eu == pytest.approx(base.eu, abs=1e-12)

    def test_blocked_sum_matches_single_block(self, rng):
        b = random_ensemble(rng, 50, 3)
        rule = make_rule("spherical")
        assert expected_pairwise_divergence(b.members, b.weights, rule, block=7) == pytest.approx(
            expected_pairwise_divergence(b.members, b.weights, rule, block=1024), abs=1e-13)

    def test_member_cap(self):
        b = EnsembleBelief(np.full((11, 2), 0.5))
        with pytest.raises(ValueError, match="cap"):
            psr_decomposition(b, make_rule("brier"), max_members=10)

    @pytest.mark.parametrize("name", RULES)
    def test_probabilistic(self, name, rng):
        rule = make_rule(name)
        theta = random_simplex(rng, 5)
        r = probabilistic_report(theta, rule)
        assert r.eu == 0.0 and r.au == r.tu == pytest.approx(rule_entropy(rule, theta))


class TestDirichlet:
    def test_shape_and_reproducible(self):
        a = sample_dirichlet(DirichletBelief([1, 1]), 3, seed=11)
        b = sample_dirichlet(DirichletBelief([1, 1]), 3, seed=11)
        assert a.members.shape == (3, 2)
        np.testing.assert_array_equal(a.members, b.members)
        np.testing.assert_allclose(a.members.sum(axis=1), 1.0)

    def test_concentrated_mean(self):
        ens = sample_dirichlet(DirichletBelief([1000, 1000]), 1000, seed=3)
        assert np.max(np.abs(bma(ens) - 0.5)) < 0.03

    def test_brier_moment_oracle(self):
        # E[1 - sum theta_k^2] = 1 - 3 * 2 / 12 for a flat Dirichlet on K=3
        ens = sample_dirichlet(DirichletBelief([1, 1, 1]), 4000, seed=5)
        assert psr_decomposition(ens, make_rule("brier")).au == pytest.approx(0.5, abs=0.02)

    def test_entropy_sample_mean(self):
        ens = sample_dirichlet(DirichletBelief([2, 3]), 200, seed=1)
        assert classic_decomposition(ens).au == pytest.approx(np.mean(shannon_entropy(ens.members)))

    def test_needs_samples(self):
        with pytest.raises(ValueError):
            sample_dirichlet(DirichletBelief([1, 1]), 0)
