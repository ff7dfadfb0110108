import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from psruq.simplex import (
    LogBase,
    ValidationError,
    hartley,
    kl_divergence,
    shannon_entropy,
    smooth,
    validate_prob_vec,
)

from conftest import random_simplex


def entropy_oracle(theta):
    return -sum(p * math.log2(p) for p in theta if p > 0)


def kl_oracle(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a == 0:
            continue
        if b == 0:
            return math.inf
        total += a * math.log2(a / b)
    return total


class TestValidate:
    def test_already_valid(self):
        np.testing.assert_array_equal(validate_prob_vec([0.5, 0.5]), [0.5, 0.5])

    def test_bad_sum(self):
        with pytest.raises(ValidationError, match="sum"):
            validate_prob_vec([0.3, 0.3])

    def test_clamp_within_tolerance(self):
        theta = validate_prob_vec([1.0 + 1e-12, -1e-12])
        np.testing.assert_array_equal(theta, [1.0, 0.0])
        assert theta.sum() == 1.0

    def test_negative_beyond_tolerance(self):
        with pytest.raises(ValidationError, match="negative"):
            validate_prob_vec([1.1, -0.1])

    @pytest.mark.parametrize("raw", [[1.0], [], [np.nan, 1.0]])
    def test_degenerate(self, raw):
        with pytest.raises(ValidationError):
            validate_prob_vec(raw)

    def test_immutable(self):
        theta = validate_prob_vec([0.25, 0.75])
        with pytest.raises(ValueError):
            theta[0] = 1.0


class TestEntropy:
    def test_uniform_binary(self):
        assert shannon_entropy([0.5, 0.5]) == pytest.approx(1.0, abs=1e-15)

    def test_degenerate(self):
        assert shannon_entropy([1.0, 0.0]) == 0.0

    def test_derived_value(self):
        assert shannon_entropy([0.9, 0.1]) == pytest.approx(entropy_oracle([0.9, 0.1]), abs=1e-14)
        assert shannon_entropy([0.9, 0.1]) == pytest.approx(0.468996, abs=1e-6)

    @pytest.mark.parametrize("k", range(2, 11))
    def test_uniform_is_maximum(self, k, rng):
        top = shannon_entropy(np.full(k, 1.0 / k))
        assert top == pytest.approx(math.log2(k), abs=1e-12)
        assert np.all(shannon_entropy(random_simplex(rng, k, 1000)) <= top + 1e-12)

    def test_permutation_invariant(self, rng):
        for _ in range(200):
            theta = random_simplex(rng, int(rng.integers(2, 9)))
            assert shannon_entropy(rng.permutation(theta)) == pytest.approx(shannon_entropy(theta), abs=1e-13)

    def test_units(self, rng):
        theta = random_simplex(rng, 5, 100)
        np.testing.assert_allclose(shannon_entropy(theta, "nats"),
                                   shannon_entropy(theta, "bits") * math.log(2), atol=1e-12)

    def test_unknown_base(self):
        with pytest.raises(ValueError, match="log base"):
            shannon_entropy([0.5, 0.5], "decibans")


class TestHartley:
    @pytest.mark.parametrize("size,expected", [(1, 0.0), (4, 2.0), (3, math.log2(3))])
    def test_values(self, size, expected):
        assert hartley(set(range(size))) == pytest.approx(expected, abs=1e-12)

    def test_three_frozen(self):
        assert hartley(3) == pytest.approx(1.584963, abs=1e-6)

    def test_nats(self):
        assert hartley(4, LogBase.NATS) == pytest.approx(math.log(4))

    def test_empty(self):
        with pytest.raises(ValueError):
            hartley(set())


class TestKL:
    def test_identity(self):
        assert kl_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0

    def test_disjoint(self):
        assert kl_divergence([1.0, 0.0], [0.0, 1.0]) == math.inf

    def test_derived(self):
        p, q = [0.9, 0.1], [0.5, 0.5]
        assert kl_divergence(p, q) == pytest.approx(kl_oracle(p, q), abs=1e-14)
        assert kl_divergence(p, q) == pytest.approx(0.531004, abs=1e-6)

    def test_zero_numerator_terms(self):
        assert kl_divergence([1.0, 0.0], [0.5, 0.5]) == pytest.approx(1.0)

    def test_gibbs(self, rng):
        for _ in range(500):
            k = int(rng.integers(2, 9))
            p, q = random_simplex(rng, k), random_simplex(rng, k)
            d = kl_divergence(p, q)
            assert d >= 0.0
            if np.max(np.abs(p - q)) > 1e-12:
                assert d > 0.0
            assert kl_divergence(p, p) == 0.0

    def test_units(self, rng):
        p, q = random_simplex(rng, 4, 50), random_simplex(rng, 4, 50)
        np.testing.assert_allclose(kl_divergence(p, q, "nats"), kl_divergence(p, q) * math.log(2), atol=1e-12)

    def test_smoothing_makes_finite(self):
        assert math.isfinite(kl_divergence([1.0, 0.0], smooth([0.0, 1.0], 1e-10)))


@settings(max_examples=200, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=8).filter(lambda xs: sum(xs) > 1e-3))
def test_entropy_bounds_property(xs):
    theta = np.array(xs) / sum(xs)
    h = shannon_entropy(theta)
    assert 0.0 <= h <= math.log2(len(xs)) + 1e-12
    assert h == pytest.approx(entropy_oracle(theta), abs=1e-9)
