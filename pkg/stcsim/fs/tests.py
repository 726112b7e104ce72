import itertools

import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from stcsim.linops import SensingKind, make_sensing_operator
from stcsim.chanmodel import (
    ChannelGenSpec,
    generate_channel,
    delay_to_freq,
    noise_variance,
    observe,
)
from stcsim.engine import DenoiserInputError, run_turbo
from stcsim.priors import (
    BGPrior,
    PriorError,
    support_logit,
    bg_scalar_posterior,
    chain_forward_backward_logit,
    denoise_bg_iid,
)
from . import FsParams, FrequencySupportDenoiser, denoise_fs


def cn_density(x, var):
    return np.exp(-np.abs(x) ** 2 / var) / (np.pi * var)


def enumerate_common_support(h_pri, v_pri, params):
    """ P(s_n = 1 | H_B^pri) by summing the joint over all supports """
    n, p_taps = h_pri.shape
    sigma2 = params.slab_variances(p_taps)
    on = np.prod(cn_density(h_pri, v_pri + sigma2), axis=1)
    off = np.prod(cn_density(h_pri, v_pri), axis=1)

    marginal = np.zeros(n)
    total = 0.0
    for s in itertools.product([0, 1], repeat=n):
        weight = params.lambda_f if s[0] else 1 - params.lambda_f
        for i in range(1, n):
            if s[i - 1]:
                weight *= params.p01 if not s[i] else 1 - params.p01
            else:
                weight *= params.p10 if s[i] else 1 - params.p10
        weight *= np.prod(np.where(s, on, off))
        total += weight
        marginal += weight * np.array(s)
    return marginal / total


class FsParamsTests(SimpleTestCase):
    def test_tied_transition(self):
        params = FsParams(lambda_f=1 / 16, p01=1 / 16)
        self.assertAlmostEqual(params.p10, 1 / 240)

    def test_explicit_transition(self):
        params = FsParams(lambda_f=0.3, p01=0.1, p10=0.2)
        self.assertEqual(params.p10, 0.2)

    def test_invalid(self):
        with self.assertRaises(PriorError):
            FsParams(lambda_f=0.0)
        with self.assertRaises(PriorError):
            FsParams(lambda_f=0.9, p01=0.5)
        with self.assertRaises(PriorError):
            FsParams(sigma2_f=[1.0, 0.0])


class DenoiseFsTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(42)

    def random_instance(self, n, p_taps):
        h_pri = (
            self.rng.standard_normal((n, p_taps))
            + 1j * self.rng.standard_normal((n, p_taps))
        )
        v_pri = self.rng.uniform(0.2, 1.0, p_taps)
        params = FsParams(
            lambda_f=self.rng.uniform(0.1, 0.5),
            p01=self.rng.uniform(0.1, 0.5),
            sigma2_f=self.rng.uniform(0.5, 2.0, p_taps),
        )
        return h_pri, v_pri, params

    def test_enumeration(self):
        for _ in range(50):
            h_pri, v_pri, params = self.random_instance(8, 2)
            out = denoise_fs(h_pri, v_pri, params)
            expected = enumerate_common_support(h_pri, v_pri, params)
            assert_allclose(out.posterior.support, expected, atol=1e-8)

    def test_enumeration_three_taps(self):
        h_pri, v_pri, params = self.random_instance(6, 3)
        out = denoise_fs(h_pri, v_pri, params)
        expected = enumerate_common_support(h_pri, v_pri, params)
        assert_allclose(out.posterior.support, expected, atol=1e-8)

    def test_single_tap(self):
        h_pri, v_pri, params = self.random_instance(10, 1)
        out = denoise_fs(h_pri, v_pri, params)

        evidence = support_logit(h_pri[:, 0], v_pri[0], params.sigma2_f[0])
        chain = chain_forward_backward_logit(evidence, params.chain())
        mean, var = bg_scalar_posterior(
            h_pri[:, 0], v_pri[0], chain.marginal, params.sigma2_f[0]
        )
        assert_allclose(out.mean[:, 0], mean)
        assert_allclose(out.variance[0], var.mean())
        assert_allclose(out.posterior.extrinsic_logit[:, 0],
                        chain.marginal_logit - evidence, atol=1e-10)

    def test_memoryless_single_tap_is_iid(self):
        h_pri, v_pri, _ = self.random_instance(12, 1)
        params = FsParams(lambda_f=0.3, p01=0.7, sigma2_f=1.5)
        out = denoise_fs(h_pri, v_pri, params)
        iid = denoise_bg_iid(h_pri, v_pri, BGPrior(pi=0.3, sigma2_h=1.5))
        assert_allclose(out.mean, iid.mean, atol=1e-12)
        assert_allclose(out.variance, iid.variance, atol=1e-12)

    def test_extrinsic_excludes_own_tap(self):
        h_pri, v_pri, params = self.random_instance(8, 3)
        before = denoise_fs(h_pri, v_pri, params).posterior.extrinsic_logit

        h_pri[4, 1] = 5.0 + 5.0j
        after = denoise_fs(h_pri, v_pri, params).posterior.extrinsic_logit

        self.assertAlmostEqual(after[4, 1], before[4, 1], places=10)
        self.assertGreater(after[4, 0], before[4, 0] + 1)
        self.assertGreater(after[4, 2], before[4, 2] + 1)

    def test_reversal_symmetry(self):
        h_pri, v_pri, params = self.random_instance(9, 2)
        out = denoise_fs(h_pri, v_pri, params)
        reversed_out = denoise_fs(h_pri[::-1], v_pri, params)
        assert_allclose(
            reversed_out.posterior.support[::-1],
            out.posterior.support,
            atol=1e-10,
        )

    def test_non_finite_input(self):
        h_pri, v_pri, params = self.random_instance(4, 2)
        h_pri[0, 0] = np.nan
        with self.assertRaises(DenoiserInputError):
            denoise_fs(h_pri, v_pri, params)
        with self.assertRaises(DenoiserInputError):
            denoise_fs(np.ones((4, 2)), [1.0, 0.0], params)


class FsTurboTests(SimpleTestCase):
    def setUp(self):
        # one delay tap, so the frequency taps share its support exactly
        spec = ChannelGenSpec(n=256, p_taps=4, l_max=1)
        for seed in itertools.count():
            h = generate_channel(spec.replace(seed=seed))
            if np.count_nonzero(h.values[:, 0]) >= 8:
                break
        self.spec = spec
        self.h = delay_to_freq(h)
        self.params = FsParams(lambda_f=1 / 16, p01=1 / 16, sigma2_f=0.25)

    def test_noiseless_full_sampling(self):
        op = make_sensing_operator(256, 256, SensingKind.DFT_RP, seed=3)
        y = observe(op, self.h, 0.0, rng=1)
        result = run_turbo(
            op, y, FrequencySupportDenoiser(self.params), truth=self.h
        )
        self.assertLess(result.nmse_trace_db[0], -200)

    def test_recovery(self):
        op = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=3)
        sigma2 = noise_variance(self.spec.mean_entry_power(), 30.0)
        y = observe(op, self.h, sigma2, rng=1)
        result = run_turbo(
            op, y, FrequencySupportDenoiser(self.params), truth=self.h
        )
        self.assertLess(result.final_nmse_db, -20)
        self.assertIn('support', result.diagnostics)
