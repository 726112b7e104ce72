import itertools

import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from stcsim.linops import SensingKind, make_sensing_operator
from stcsim.chanmodel import ChannelGenSpec, generate_channel, observe
from stcsim.engine import run_turbo
from stcsim.priors import PriorError, chain_forward_backward_logit
from . import (
    DsMode,
    DsParams,
    DelaySupportDenoiser,
    denoise_ds,
    ds_column_activity,
    compare_ds_schedules,
)


def cn_density(x, var):
    return np.exp(-np.abs(x) ** 2 / var) / (np.pi * var)


def chain_prior(s, lambda0, p10, p01):
    weight = lambda0 if s[0] else 1 - lambda0
    for i in range(1, len(s)):
        if s[i - 1]:
            weight *= p01 if not s[i] else 1 - p01
        else:
            weight *= p10 if s[i] else 1 - p10
    return weight


def enumerate_tap(h, v, params, p):
    """ P(s_n = 1) and P(t = 1) of tap p by summing over t and all s """
    n = len(h)
    on = cn_density(h, v + params.sigma2_d[p])
    off = cn_density(h, v)
    eps = params.epsilon

    marginal = np.zeros(n)
    active = 0.0
    total = 0.0
    for s in itertools.product([0, 1], repeat=n):
        likelihood = np.prod(np.where(s, on, off))
        weight_on = params.gamma[p] * chain_prior(
            s, params.lambda_d[p], params.p10[p], params.p01[p]
        )
        weight_off = (1 - params.gamma[p]) * chain_prior(s, eps, eps, 1 - eps)
        weight = (weight_on + weight_off) * likelihood
        total += weight
        active += weight_on * likelihood
        marginal += weight * np.array(s)
    return marginal / total, active / total


def uninformative(v, sigma2):
    """ A magnitude whose support log-odds are exactly zero """
    return np.sqrt(v * (v + sigma2) / sigma2 * np.log((v + sigma2) / v))


class DsParamsTests(SimpleTestCase):
    def test_tied_transition(self):
        params = DsParams(lambda_d=[1 / 16, 0.5], p01=[1 / 16, 0.2])
        assert_allclose(params.p10, [1 / 240, 0.2])

    def test_per_tap(self):
        params = DsParams(gamma=0.3).per_tap(4)
        self.assertEqual(params.gamma.shape, (4,))
        self.assertEqual(params.sigma2_d.shape, (4,))
        assert_allclose(params.p10, 1 / 240)

    def test_invalid(self):
        with self.assertRaises(PriorError):
            DsParams(gamma=1.5)
        with self.assertRaises(PriorError):
            DsParams(epsilon=0.0)
        with self.assertRaises(PriorError):
            DsParams(epsilon=0.2)
        with self.assertRaises(PriorError):
            DsParams(lambda_d=[0.1, 1.0])
        with self.assertRaises(PriorError):
            DsParams(sigma2_d=-1.0)

    def test_to_dict(self):
        data = DsParams(gamma=0.25).per_tap(2).to_dict()
        self.assertEqual(data['gamma'], [0.25, 0.25])
        self.assertEqual(data['epsilon'], 1e-3)


class DenoiseDsTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(7)

    def random_instance(self, n, p_taps):
        h_pri = (
            self.rng.standard_normal((n, p_taps))
            + 1j * self.rng.standard_normal((n, p_taps))
        )
        v_pri = self.rng.uniform(0.2, 1.0, p_taps)
        params = DsParams(
            lambda_d=self.rng.uniform(0.1, 0.5, p_taps),
            p01=self.rng.uniform(0.1, 0.5, p_taps),
            sigma2_d=self.rng.uniform(0.5, 2.0, p_taps),
            gamma=self.rng.uniform(0.1, 0.9, p_taps),
        )
        return h_pri, v_pri, params

    def test_enumeration(self):
        for _ in range(50):
            h_pri, v_pri, params = self.random_instance(6, 1)
            out = denoise_ds(h_pri, v_pri, params)
            support, activity = enumerate_tap(h_pri[:, 0], v_pri[0], params, 0)
            assert_allclose(out.posterior.support[:, 0], support, atol=1e-8)
            assert_allclose(
                out.posterior.column_activity[0], activity, atol=1e-8
            )

    def test_enumeration_independent_taps(self):
        h_pri, v_pri, params = self.random_instance(6, 3)
        out = denoise_ds(h_pri, v_pri, params)
        for p in range(3):
            support, activity = enumerate_tap(h_pri[:, p], v_pri[p], params, p)
            assert_allclose(out.posterior.support[:, p], support, atol=1e-8)
            assert_allclose(ds_column_activity(out.posterior)[p], activity,
                            atol=1e-8)

    def test_always_active_is_single_chain(self):
        h_pri, v_pri, params = self.random_instance(10, 2)
        params = DsParams(
            lambda_d=params.lambda_d,
            p01=params.p01,
            sigma2_d=params.sigma2_d,
            gamma=1.0,
        )
        evidence = denoise_ds(h_pri, v_pri, params).posterior.evidence_logit
        chain = chain_forward_backward_logit(evidence, params.active_chain())

        for mode in DsMode:
            out = denoise_ds(h_pri, v_pri, params, mode)
            assert_allclose(out.posterior.support, chain.marginal, atol=1e-10)
            assert_allclose(out.posterior.column_activity, 1.0)

    def test_uninformative_evidence(self):
        v, sigma2 = 0.5, 2.0
        h_pri = np.full((12, 2), uninformative(v, sigma2), dtype=complex)
        params = DsParams(sigma2_d=sigma2, gamma=[0.2, 0.7])

        for mode in DsMode:
            out = denoise_ds(h_pri, v, params, mode)
            assert_allclose(out.posterior.evidence_logit, 0.0, atol=1e-12)
            assert_allclose(
                out.posterior.column_activity, [0.2, 0.7], atol=1e-10
            )

    def test_activity_follows_evidence(self):
        h_pri = np.zeros((16, 2), dtype=complex)
        h_pri[:, 1] = 10.0
        params = DsParams(gamma=0.5)

        activity = denoise_ds(h_pri, 0.1, params).posterior.column_activity
        self.assertLess(activity[0], 0.5)
        self.assertGreater(activity[1], 0.5)

    def test_tap_permutation(self):
        h_pri, v_pri, params = self.random_instance(8, 3)
        order = [2, 0, 1]
        permuted = DsParams(
            lambda_d=params.lambda_d[order],
            p01=params.p01[order],
            sigma2_d=params.sigma2_d[order],
            gamma=params.gamma[order],
        )

        out = denoise_ds(h_pri, v_pri, params)
        other = denoise_ds(h_pri[:, order], v_pri[order], permuted)
        assert_allclose(other.mean, out.mean[:, order], atol=1e-12)
        assert_allclose(other.variance, out.variance[order], atol=1e-12)
        assert_allclose(
            other.posterior.column_logit,
            out.posterior.column_logit[order],
            atol=1e-10,
        )

    def test_module_b_output(self):
        h_pri, v_pri, params = self.random_instance(8, 2)
        out = denoise_ds(h_pri, v_pri, params)
        self.assertEqual(out.mean.shape, (8, 2))
        self.assertEqual(out.variance.shape, (2,))
        self.assertTrue(np.all(out.variance >= 0))
        self.assertIn('column_activity', out.diagnostics)
        assert_allclose(out.activity, out.posterior.support)


class ScheduleTests(SimpleTestCase):
    def clear_cut(self):
        h_pri = np.zeros((16, 2), dtype=complex)
        h_pri[:, 1] = 10.0
        return h_pri, 0.1, DsParams(gamma=0.5)

    def test_schedules_agree_on_clear_taps(self):
        h_pri, v_pri, params = self.clear_cut()
        difference = compare_ds_schedules(h_pri, v_pri, params)
        self.assertLess(difference, 0.05)

    def test_loopy_schedule_activity(self):
        h_pri, v_pri, params = self.clear_cut()
        out = denoise_ds(h_pri, v_pri, params, DsMode.PAPER_SCHEDULE)
        activity = out.posterior.column_activity
        self.assertLess(activity[0], 0.5)
        self.assertGreater(activity[1], 0.99)
        self.assertEqual(out.posterior.mode, DsMode.PAPER_SCHEDULE)

    def test_disagreement_is_logged(self):
        h_pri, v_pri, params = self.clear_cut()
        with self.assertLogs('stcsim.ds.denoiser', 'WARNING'):
            compare_ds_schedules(h_pri, v_pri, params, threshold=-1.0)

    def test_mode_from_string(self):
        h_pri, v_pri, params = self.clear_cut()
        out = denoise_ds(h_pri, v_pri, params, 'PAPER_SCHEDULE')
        self.assertEqual(out.posterior.mode, DsMode.PAPER_SCHEDULE)


class DsTurboTests(SimpleTestCase):
    def setUp(self):
        spec = ChannelGenSpec(n=256, p_taps=8, l_max=4)
        for seed in itertools.count():
            h = generate_channel(spec.replace(seed=seed))
            if np.count_nonzero(h.values) >= 8:
                break
        self.h = h

    def test_noiseless_full_sampling(self):
        op = make_sensing_operator(256, 256, SensingKind.DFT_RP, seed=3)
        y = observe(op, self.h, 0.0, rng=1)
        params = DsParams(sigma2_d=1.0, gamma=[0.9] * 4 + [0.1] * 4)
        result = run_turbo(op, y, DelaySupportDenoiser(params), truth=self.h)
        self.assertLess(result.nmse_trace_db[0], -200)
        self.assertEqual(len(result.column_activity), 8)
