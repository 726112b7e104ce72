import itertools

import numpy as np
from numpy.testing import assert_allclose
from scipy.special import expit

from django.test import SimpleTestCase

from stcsim.linops import SensingKind, make_sensing_operator
from stcsim.chanmodel import (
    ChannelGenSpec,
    Domain,
    generate_channel,
    delay_to_freq,
    noise_variance,
    observe,
)
from stcsim.engine import ModuleBOutput, IidDenoiser, run_turbo, nmse
from stcsim.fs import FsParams, FsPosterior, FrequencySupportDenoiser
from stcsim.ds import DsMode, DsParams, DsPosterior
from stcsim.priors import BGPrior, ChainPosterior
from . import (
    GAMMA_STEP,
    LambdaUpdate,
    FsLearner,
    IidLearner,
    em_init_sigma2,
    em_init_fs,
    em_init_ds,
    em_init_iid,
    em_update_fs,
    em_update_ds,
    em_update_iid,
)


def oracle_chain(support):
    """ A chain posterior that is certain of the given support """
    support = np.asarray(support, dtype=int)
    pairwise = np.zeros(support[1:].shape + (2, 2))
    prev, nxt = support[:-1], support[1:]
    index = np.indices(prev.shape)
    pairwise[(*index, prev, nxt)] = 1.0
    logit = np.where(support == 1, 50.0, -50.0)
    return ChainPosterior(
        forward=np.full(support.shape, 0.5),
        backward=np.full(support.shape, 0.5),
        marginal_logit=logit,
        pairwise=pairwise,
        log_partition=np.zeros(support.shape[1:]),
    )


def oracle_output(h, activity, posterior):
    return ModuleBOutput(
        mean=h,
        variance=np.zeros(h.shape[1]),
        activity=activity,
        slab_second_moment=np.abs(h) ** 2 * activity,
        posterior=posterior,
    )


class InitTests(SimpleTestCase):
    def setUp(self):
        self.op = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=0)

    def test_energy_formula(self):
        sigma2 = em_init_sigma2(np.ones((103, 2)), self.op)
        assert_allclose(sigma2, 2 * 256 / 103)
        self.assertAlmostEqual(sigma2[0], 4.971, places=3)

    def test_zero_observation(self):
        assert_allclose(em_init_sigma2(np.zeros((103, 3)), self.op), 1e-12)

    def test_fs(self):
        params = em_init_fs(np.ones((103, 4)), self.op)
        self.assertEqual(params.lambda_f, 0.3)
        self.assertEqual(params.p01, 0.1)
        self.assertEqual(params.sigma2_f.shape, (4,))

    def test_ds(self):
        params = em_init_ds(np.ones((103, 4)), [self.op] * 4)
        assert_allclose(params.lambda_d, 0.3)
        assert_allclose(params.p01, 0.1)
        assert_allclose(params.gamma, 0.1)

    def test_iid(self):
        prior = em_init_iid(np.ones((103, 2)), self.op)
        assert_allclose(prior.pi, 0.3)


class FsUpdateTests(SimpleTestCase):
    def setUp(self):
        self.support = np.array([0, 1, 1, 1, 0, 0, 1, 1, 0, 0])
        rng = np.random.default_rng(5)
        shape = (10, 3)
        gains = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
        self.h = gains * self.support[:, np.newaxis]
        activity = np.repeat(self.support[:, np.newaxis], 3, axis=1)
        self.output = oracle_output(
            self.h,
            activity.astype(float),
            FsPosterior(
                chain=oracle_chain(self.support),
                evidence_logit=np.zeros((10, 3)),
                extrinsic_logit=np.zeros((10, 3)),
            ),
        )

    def test_oracle_posteriors(self):
        params = em_update_fs(FsParams(), self.output)
        # the first state is off
        self.assertAlmostEqual(params.lambda_f, 1e-6)
        # ones at positions 0..8: 1,2,3,6,7; two of them are followed by 0
        self.assertAlmostEqual(params.p01, 2 / 5)
        # zeros at positions 0..8: 0,4,5,8; two of them are followed by 1
        self.assertAlmostEqual(params.p10, 2 / 4)
        expected = np.sum(np.abs(self.h) ** 2, axis=0) / 5
        assert_allclose(params.sigma2_f, expected)

    def test_mean_activity_update(self):
        params = em_update_fs(FsParams(), self.output, LambdaUpdate.MEAN)
        self.assertAlmostEqual(params.lambda_f, 0.5)
        self.assertAlmostEqual(params.p01, 2 / 5)
        self.assertAlmostEqual(params.p10, 2 / 4)

    def test_tied_sigma(self):
        params = em_update_fs(FsParams(), self.output, tied_sigma=True)
        expected = np.sum(np.abs(self.h) ** 2) / 15
        assert_allclose(params.sigma2_f, expected)

    def test_empty_support(self):
        empty = np.zeros(10, dtype=int)
        output = oracle_output(
            np.zeros((10, 3)),
            np.zeros((10, 3)),
            FsPosterior(
                chain=oracle_chain(empty),
                evidence_logit=np.zeros((10, 3)),
                extrinsic_logit=np.zeros((10, 3)),
            ),
        )
        params = FsParams(lambda_f=0.2, p01=0.3, sigma2_f=2.0)
        self.assertIs(em_update_fs(params, output), params)

    def test_parameters_stay_valid(self):
        full = np.ones(10, dtype=int)
        output = oracle_output(
            np.ones((10, 2)),
            np.ones((10, 2)),
            FsPosterior(
                chain=oracle_chain(full),
                evidence_logit=np.zeros((10, 2)),
                extrinsic_logit=np.zeros((10, 2)),
            ),
        )
        params = em_update_fs(FsParams(), output)
        self.assertLess(params.lambda_f, 1)
        self.assertGreater(params.p01, 0)
        self.assertLess(params.p10, 1)


class DsUpdateTests(SimpleTestCase):
    def setUp(self):
        self.support = np.array([
            [1, 0, 0],
            [1, 0, 1],
            [0, 0, 1],
            [0, 0, 1],
            [1, 0, 0],
            [1, 0, 0],
        ])
        rng = np.random.default_rng(8)
        gains = rng.standard_normal((6, 3)) + 1j * rng.standard_normal((6, 3))
        self.h = gains * self.support
        self.column_logit = np.array([40.0, -40.0, 40.0])
        self.output = oracle_output(
            self.h,
            self.support.astype(float),
            DsPosterior(
                mode=DsMode.EXACT,
                support=self.support.astype(float),
                column_logit=self.column_logit,
                chain=oracle_chain(self.support),
                evidence_logit=np.zeros((6, 3)),
            ),
        )
        self.params = DsParams(lambda_d=0.2, p01=0.3, sigma2_d=2.0, gamma=0.5)

    def test_oracle_posteriors(self):
        params = em_update_ds(self.params, self.output)
        assert_allclose(params.lambda_d[[0, 2]], [1 - 1e-6, 1e-6])
        assert_allclose(params.p01[[0, 2]], [1 / 3, 1 / 3])
        assert_allclose(params.p10[[0, 2]], [1 / 2, 1 / 2])
        assert_allclose(
            params.sigma2_d[[0, 2]],
            np.sum(np.abs(self.h) ** 2, axis=0)[[0, 2]] / [4, 3],
        )
        # one step of at most GAMMA_STEP in log-odds from 1/2
        assert_allclose(params.gamma[[0, 2]], expit(GAMMA_STEP))

    def test_mean_activity_update(self):
        params = em_update_ds(self.params, self.output, LambdaUpdate.MEAN)
        assert_allclose(params.lambda_d[[0, 2]], [4 / 6, 3 / 6])

    def test_gamma_reaches_posterior(self):
        params = self.params
        for _ in range(5):
            params = em_update_ds(params, self.output)
        assert_allclose(params.gamma[[0, 2]], 1 - 1e-6)

    def test_gamma_does_not_flip_in_one_step(self):
        certain = DsParams(lambda_d=0.2, p01=0.3, sigma2_d=2.0,
                           gamma=1 - 1e-6)
        self.output.posterior.column_logit[:] = -40.0
        params = em_update_ds(certain, self.output)
        self.assertTrue(np.all(params.gamma[[0, 2]] > 0.5))
        self.assertLess(params.gamma[0], 1 - 1e-6)

    def test_empty_tap_keeps_parameters(self):
        params = em_update_ds(self.params, self.output)
        self.assertAlmostEqual(params.lambda_d[1], 0.2)
        self.assertAlmostEqual(params.p01[1], 0.3)
        self.assertAlmostEqual(params.sigma2_d[1], 2.0)
        self.assertAlmostEqual(params.gamma[1], 0.5)

    def test_epsilon_kept(self):
        params = DsParams(gamma=0.5, epsilon=0.01)
        self.assertEqual(em_update_ds(params, self.output).epsilon, 0.01)


class IidUpdateTests(SimpleTestCase):
    def test_oracle_posteriors(self):
        support = np.array([[1, 0], [0, 0], [1, 0], [1, 0]])
        h = np.where(support, 2.0, 0.0)
        output = oracle_output(h, support.astype(float), None)
        prior = em_update_iid(BGPrior(pi=0.5, sigma2_h=1.0), output)
        assert_allclose(prior.pi, [0.75, 0.5])
        assert_allclose(prior.sigma2_h, [4.0, 1.0])


class LearnerTests(SimpleTestCase):
    def setUp(self):
        spec = ChannelGenSpec(n=256, p_taps=4, l_max=1)
        for seed in itertools.count():
            h = generate_channel(spec.replace(seed=seed))
            if np.count_nonzero(h.values[:, 0]) >= 8:
                break
        self.h = delay_to_freq(h)
        self.op = make_sensing_operator(256, 128, SensingKind.DFT_RP, seed=3)
        sigma2 = noise_variance(spec.mean_entry_power(), 30.0)
        self.y = observe(self.op, self.h, sigma2, rng=1)

    def test_fs_learning_run(self):
        params = em_init_fs(self.y, self.op)
        learner = FsLearner(params)
        result = run_turbo(
            self.op,
            self.y,
            FrequencySupportDenoiser(params),
            truth=self.h,
            learner=learner,
        )
        self.assertEqual(len(result.learned_params), result.iterations_used)
        self.assertEqual(learner.state.iteration, result.iterations_used)
        self.assertIn('lambda_f', result.learned_params[-1])
        self.assertLess(result.final_nmse_db, -5)

    def test_iid_learning_run(self):
        prior = em_init_iid(self.y, self.op)
        result = run_turbo(
            self.op,
            self.y,
            IidDenoiser(prior, Domain.ANGLE_FREQUENCY),
            truth=self.h,
            learner=IidLearner(prior),
        )
        self.assertIn('pi', result.learned_params[0])
        self.assertLess(nmse(result.h_hat, self.h)[1], 0)
