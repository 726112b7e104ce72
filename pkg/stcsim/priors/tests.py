import itertools

import numpy as np
from numpy.testing import assert_allclose
from scipy.special import expit, logit

from django.test import SimpleTestCase

from . import (
    BGPrior,
    ChainParams,
    ChainError,
    PriorError,
    support_logit,
    support_evidence,
    bg_scalar_posterior,
    denoise_bg_iid,
    chain_forward_backward,
    chain_forward_backward_logit,
    leave_one_out,
)


def cn_density(x, mean, var):
    return np.exp(-np.abs(x - mean) ** 2 / var) / (np.pi * var)


def slab_quadrature(m, v, sigma2_h):
    """ Evidence and posterior moments of the slab branch on a fine grid """
    axis = np.linspace(-6, 6, 1201)
    step = axis[1] - axis[0]
    h = axis[:, np.newaxis] + 1j * axis[np.newaxis, :]
    weights = cn_density(m, h, v) * cn_density(h, 0, sigma2_h)
    evidence = weights.sum() * step ** 2
    mean = (h * weights).sum() * step ** 2 / evidence
    second = (np.abs(h) ** 2 * weights).sum() * step ** 2 / evidence
    return evidence, mean, second


def enumerate_chain(evidence, p10, p01, lambda0):
    """ Marginals, pairwise posteriors and log partition by brute force

    `p10` and `p01` may be per position, entry n being the transition into
    position n. """
    n = len(evidence)
    p10 = np.broadcast_to(p10, (n,))
    p01 = np.broadcast_to(p01, (n,))

    marginal = np.zeros(n)
    pairwise = np.zeros((n - 1, 2, 2))
    total = 0.0
    for s in itertools.product([0, 1], repeat=n):
        weight = lambda0 if s[0] else 1 - lambda0
        for i in range(1, n):
            if s[i - 1]:
                weight *= p01[i] if not s[i] else 1 - p01[i]
            else:
                weight *= p10[i] if s[i] else 1 - p10[i]
        for i in range(n):
            weight *= evidence[i] if s[i] else 1 - evidence[i]

        total += weight
        marginal += weight * np.array(s)
        for i in range(1, n):
            pairwise[i - 1, s[i - 1], s[i]] += weight

    return marginal / total, pairwise / total, np.log(total)


class SupportEvidenceTests(SimpleTestCase):
    def test_equal_hypotheses(self):
        for m in (0.0, 1.0 - 2j, 30.0):
            self.assertAlmostEqual(float(support_evidence(m, 0.7, 0.0)), 0.5)

    def test_zero_observation(self):
        v, sigma2_h = 0.3, 2.0
        self.assertAlmostEqual(
            float(support_evidence(0.0, v, sigma2_h)),
            v / (2 * v + sigma2_h),
            places=14,
        )

    def test_strong_observation(self):
        self.assertGreater(float(support_evidence(100.0, 1.0, 1.0)), 1 - 1e-12)

    def test_monotone_in_magnitude(self):
        m = np.linspace(0, 3, 50) * np.exp(0.3j)
        pi_up = support_evidence(m, 0.5, 1.5)
        self.assertTrue(np.all(np.diff(pi_up) > 0))

    def test_logit_is_finite_for_tiny_variance(self):
        value = support_logit(1.0, 1e-13, 1.0)
        self.assertTrue(np.isfinite(value))
        self.assertEqual(expit(value), 1.0)

    def test_quadrature(self):
        m, v, sigma2_h = 0.4 + 0.9j, 0.6, 1.3
        slab, _, _ = slab_quadrature(m, v, sigma2_h)
        spike = cn_density(m, 0, v)
        self.assertAlmostEqual(
            float(support_evidence(m, v, sigma2_h)),
            slab / (slab + spike),
            places=10,
        )


class ScalarPosteriorTests(SimpleTestCase):
    def test_pure_gaussian(self):
        m, v, sigma2_h = 1.5 - 0.5j, 0.4, 1.6
        g = sigma2_h / (sigma2_h + v)
        mean, var = bg_scalar_posterior(m, v, 1.0, sigma2_h)
        self.assertAlmostEqual(complex(mean), g * m)
        self.assertAlmostEqual(float(var), g * v)

    def test_inactive(self):
        mean, var = bg_scalar_posterior(1.0 + 1j, 0.4, 0.0, 1.6)
        self.assertEqual(complex(mean), 0)
        self.assertEqual(float(var), 0)

    def test_mixture_quadrature(self):
        m, v, pi_post, sigma2_h = 1.0 + 0j, 0.5, 0.7, 2.0
        _, slab_mean, slab_second = slab_quadrature(m, v, sigma2_h)
        mean, var = bg_scalar_posterior(m, v, pi_post, sigma2_h)

        expected_mean = pi_post * slab_mean
        self.assertAlmostEqual(complex(mean), expected_mean, places=10)
        self.assertAlmostEqual(
            float(var),
            pi_post * slab_second - abs(expected_mean) ** 2,
            places=10,
        )

    def test_variance_nonnegative(self):
        rng = np.random.default_rng(5)
        m = rng.standard_normal(1000) * 10 + 1j * rng.standard_normal(1000)
        v = rng.uniform(1e-13, 10, 1000)
        pi_post = rng.uniform(0, 1, 1000)
        _, var = bg_scalar_posterior(m, v, pi_post, 1.0)
        self.assertTrue(np.all(var >= 0))


class IidDenoiserTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(8)
        shape = (16, 3)
        self.h = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)

    def test_always_active(self):
        v = np.array([0.2, 0.5, 1.0])
        out = denoise_bg_iid(self.h, v, BGPrior(pi=1.0, sigma2_h=2.0))
        g = 2.0 / (2.0 + v)
        assert_allclose(out.mean, g * self.h)
        assert_allclose(out.variance, g * v)
        assert_allclose(out.activity, 1.0)

    def test_never_active(self):
        out = denoise_bg_iid(self.h, 0.5, BGPrior(pi=0.0, sigma2_h=2.0))
        self.assertFalse(np.any(out.mean))
        self.assertFalse(np.any(out.variance))

    def test_matches_quadrature(self):
        prior = BGPrior(pi=0.2, sigma2_h=1.5)
        out = denoise_bg_iid(self.h[:4, :1], 0.8, prior)
        for n in range(4):
            m = self.h[n, 0]
            slab, slab_mean, slab_second = slab_quadrature(m, 0.8, 1.5)
            spike = cn_density(m, 0, 0.8)
            active = 0.2 * slab / (0.2 * slab + 0.8 * spike)
            self.assertAlmostEqual(out.activity[n, 0], active, places=10)
            self.assertAlmostEqual(
                out.mean[n, 0], active * slab_mean, places=10
            )

    def test_per_column_prior(self):
        prior = BGPrior(pi=[0.1, 0.5, 0.9], sigma2_h=[1.0, 2.0, 3.0])
        out = denoise_bg_iid(self.h, 0.4, prior)
        single = denoise_bg_iid(self.h[:, 1], 0.4, BGPrior(0.5, 2.0))
        assert_allclose(out.mean[:, 1], single.mean[:, 0])
        assert_allclose(out.variance[1], single.variance[0])

    def test_invalid_prior(self):
        with self.assertRaises(PriorError):
            BGPrior(pi=1.5, sigma2_h=1.0)
        with self.assertRaises(PriorError):
            BGPrior(pi=0.5, sigma2_h=-1.0)


class ChainForwardBackwardTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(17)

    def random_instance(self, n):
        evidence = self.rng.uniform(0.05, 0.95, n)
        p10, p01, lambda0 = self.rng.uniform(0.05, 0.95, 3)
        return evidence, p10, p01, lambda0

    def test_uninformative_is_prior_propagation(self):
        params = ChainParams(p10=0.1, p01=0.2, lambda0=0.9)
        post = chain_forward_backward(np.full(6, 0.5), params)
        expected = [0.9]
        for _ in range(5):
            expected.append(0.8 * expected[-1] + 0.1 * (1 - expected[-1]))
        assert_allclose(post.forward, expected, atol=1e-14)
        assert_allclose(post.marginal, expected, atol=1e-12)

    def test_enumeration(self):
        for n in (3, 3, 3, 5, 8):
            evidence, p10, p01, lambda0 = self.random_instance(n)
            params = ChainParams(p10=p10, p01=p01, lambda0=lambda0)
            post = chain_forward_backward(evidence, params)
            marginal, pairwise, log_z = enumerate_chain(
                evidence, p10, p01, lambda0
            )
            assert_allclose(post.marginal, marginal, atol=1e-10)
            assert_allclose(post.pairwise, pairwise, atol=1e-10)
            self.assertAlmostEqual(float(post.log_partition), log_z, places=10)

    def test_position_dependent_kernel(self):
        evidence = self.rng.uniform(0.05, 0.95, 6)
        p10 = self.rng.uniform(0.05, 0.5, 6)
        p01 = self.rng.uniform(0.05, 0.5, 6)
        params = ChainParams(p10=p10, p01=p01, lambda0=0.3)
        post = chain_forward_backward(evidence, params)
        marginal, pairwise, log_z = enumerate_chain(evidence, p10, p01, 0.3)
        assert_allclose(post.marginal, marginal, atol=1e-10)
        assert_allclose(post.pairwise, pairwise, atol=1e-10)
        self.assertAlmostEqual(float(post.log_partition), log_z, places=10)

    def test_columns_are_independent(self):
        evidence = self.rng.uniform(0.05, 0.95, (7, 3))
        p10 = np.array([0.05, 0.2, 0.4])
        p01 = np.array([0.3, 0.1, 0.6])
        post = chain_forward_backward(evidence, ChainParams(p10, p01))
        for k in range(3):
            single = chain_forward_backward(
                evidence[:, k], ChainParams(p10[k], p01[k])
            )
            assert_allclose(post.marginal[:, k], single.marginal)
            assert_allclose(post.pairwise[:, k], single.pairwise)
            assert_allclose(post.log_partition[k], single.log_partition)

    def test_memoryless_is_iid(self):
        evidence_logit = self.rng.normal(0, 3, 10)
        post = chain_forward_backward_logit(
            evidence_logit, ChainParams.memoryless(0.3)
        )
        assert_allclose(
            post.marginal, expit(logit(0.3) + evidence_logit), atol=1e-12
        )

    def test_pairwise_consistency(self):
        evidence, p10, p01, lambda0 = self.random_instance(9)
        post = chain_forward_backward(evidence, ChainParams(p10, p01, lambda0))
        assert_allclose(
            post.pairwise[:, 1, :].sum(axis=-1), post.marginal[:-1], atol=1e-10
        )
        assert_allclose(
            post.pairwise[:, :, 1].sum(axis=-1), post.marginal[1:], atol=1e-10
        )

    def test_extreme_evidence(self):
        params = ChainParams(p10=0.01, p01=0.1)
        post = chain_forward_backward([0.0, 1.0, 0.5, 1.0], params)
        self.assertTrue(np.all(np.isfinite(post.marginal_logit)))

        post = chain_forward_backward_logit([-1e13, 1e13, 0.0], params)
        assert_allclose(post.marginal[:2], [0.0, 1.0])

    def test_non_finite_logit(self):
        with self.assertRaises(ChainError):
            chain_forward_backward_logit(
                [0.0, np.inf], ChainParams(p10=0.1, p01=0.1)
            )

    def test_invalid_params(self):
        with self.assertRaises(ChainError):
            ChainParams(p10=0.0, p01=0.5)
        with self.assertRaises(ChainError):
            ChainParams(p10=0.5, p01=0.5, lambda0=1.2)

    def test_tied_stationary(self):
        params = ChainParams.tied(1 / 16, 1 / 16)
        self.assertAlmostEqual(float(params.p10), 1 / 240)
        self.assertAlmostEqual(float(params.lambda0), 1 / 16)


class LeaveOneOutTests(SimpleTestCase):
    def test_sums(self):
        logits = np.arange(12.0).reshape(4, 3)
        expected = logits.sum(axis=1, keepdims=True) - logits
        assert_allclose(leave_one_out(logits, axis=1), expected)

    def test_dominant_term(self):
        result = leave_one_out(np.array([1e20, 1.0, 2.0]))
        self.assertEqual(result[0], 3.0)
        assert_allclose(result[1:], [1e20, 1e20])
