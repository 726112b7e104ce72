import json
from dataclasses import dataclass, field

import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from stcsim.linops import (
    SensingKind,
    DimensionMismatch,
    make_sensing_operator,
    materialize,
    apply_forward,
)
from stcsim.chanmodel import ChannelMatrix, Domain, observe
from stcsim.priors import BGPrior
from . import (
    V_MIN,
    V_MAX,
    ModuleAError,
    DivergenceError,
    DomainMismatch,
    ZeroNormTruth,
    Denoiser,
    ModuleBOutput,
    IdentityDenoiser,
    IidDenoiser,
    TurboConfig,
    initial_variance,
    lmmse_update,
    extrinsic,
    combine,
    nmse,
    run_turbo,
)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def sparse_channel(rng, n, p_taps, activity=0.1):
    support = rng.random((n, p_taps)) < activity
    values = np.where(support, random_complex(rng, n, p_taps) / np.sqrt(2), 0)
    return ChannelMatrix(values, Domain.ANGLE_FREQUENCY)


@dataclass(frozen=True)
class ExplodingDenoiser(Denoiser):
    def denoise(self, h_pri, v_pri):
        nan = np.full(h_pri.shape, np.nan)
        return ModuleBOutput(nan, np.ones(h_pri.shape[1]), nan, nan)


@dataclass(frozen=True)
class RecordingDenoiser(IidDenoiser):
    calls: list = field(default_factory=list)

    def denoise(self, h_pri, v_pri):
        self.calls.append(np.array(v_pri, dtype=float))
        return super().denoise(h_pri, v_pri)


class FixedLearner:
    """ Keeps the parameters it is given """

    trajectory = ()

    def update(self, denoiser, output):
        return denoiser


class LmmseTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(4)

    def test_matrix_inversion_oracle(self):
        for seed in range(5):
            op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=seed)
            a = materialize(op)
            y = random_complex(self.rng, 8)
            h_pri = random_complex(self.rng, 16)
            v_pri, sigma2 = 0.7, 0.3

            h_post, v_post = lmmse_update(op, y, h_pri, v_pri, sigma2)

            precision = np.eye(16) / v_pri + a.conj().T @ a / sigma2
            cov = np.linalg.inv(precision)
            expected = cov @ (h_pri / v_pri + a.conj().T @ y / sigma2)
            assert_allclose(h_post, expected, rtol=1e-8, atol=1e-12)
            self.assertAlmostEqual(
                float(v_post), np.trace(cov).real / 16, places=10
            )

    def test_zero_noise_half_sampling(self):
        op = make_sensing_operator(64, 32, SensingKind.DFT_RP, seed=1)
        _, v_post = lmmse_update(op, np.zeros(32), np.zeros(64), 1.0, 0.0)
        self.assertAlmostEqual(float(v_post), 0.5)

    def test_zero_noise_full_sampling(self):
        op = make_sensing_operator(32, 32, SensingKind.DFT_RP, seed=2)
        h = random_complex(self.rng, 32)
        h_post, v_post = lmmse_update(
            op, apply_forward(op, h), np.zeros(32), 1.0, 0.0
        )
        self.assertEqual(float(v_post), V_MIN)
        assert_allclose(h_post, h, atol=1e-12)

    def test_variance_decreases(self):
        op = make_sensing_operator(32, 5, SensingKind.DFT, seed=3)
        for v_pri in (1e-6, 0.1, 10.0):
            _, v_post = lmmse_update(
                op, np.zeros(5), np.zeros(32), v_pri, 0.01
            )
            self.assertLess(float(v_post), v_pri)

    def test_per_column_variances(self):
        op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=3)
        y = random_complex(self.rng, 8, 2)
        h_pri = random_complex(self.rng, 16, 2)
        h_post, v_post = lmmse_update(op, y, h_pri, [0.5, 2.0], 0.1)
        single, v_single = lmmse_update(op, y[:, 1], h_pri[:, 1], 2.0, 0.1)
        assert_allclose(h_post[:, 1], single)
        self.assertAlmostEqual(v_post[1], float(v_single))

    def test_invalid_prior(self):
        op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=3)
        with self.assertRaises(ModuleAError):
            lmmse_update(op, np.zeros(8), np.zeros(16), 0.0, 0.1)

    def test_dimension_mismatch(self):
        op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=3)
        with self.assertRaises(DimensionMismatch):
            lmmse_update(op, np.zeros(7), np.zeros(16), 1.0, 0.1)


class ExtrinsicTests(SimpleTestCase):
    def test_harmonic_identity(self):
        state = extrinsic(np.ones(3), 0.25, np.zeros(3), 0.5)
        self.assertAlmostEqual(float(state.variance), 0.5)
        self.assertFalse(state.degenerate)

    def test_zero_prior_mean(self):
        h_post = np.array([1.0 + 2j, -3.0])
        state = extrinsic(h_post, 0.2, np.zeros(2), 0.9)
        assert_allclose(state.mean, state.variance * h_post / 0.2)

    def test_recombination(self):
        rng = np.random.default_rng(9)
        for _ in range(20):
            h_pri, h_post = random_complex(rng, 2)
            v_pri = rng.uniform(0.5, 2.0)
            v_post = v_pri * rng.uniform(0.05, 0.95)
            h_ext, v_ext, _ = extrinsic(h_post, v_post, h_pri, v_pri)
            h, v = combine(h_pri, v_pri, h_ext, v_ext)
            self.assertAlmostEqual(h, h_post, places=12)
            self.assertAlmostEqual(v, v_post, places=12)

    def test_degenerate(self):
        h_post = np.array([[1.0, 2.0], [3.0, 4.0]])
        state = extrinsic(h_post, [0.5, 1.0], np.zeros((2, 2)), [1.0, 1.0])
        self.assertEqual(state.degenerate.tolist(), [False, True])
        self.assertEqual(state.variance[1], V_MAX)
        assert_allclose(state.mean[:, 1], h_post[:, 1])
        assert_allclose(state.mean[:, 0], 2 * h_post[:, 0])


class NmseTests(SimpleTestCase):
    def setUp(self):
        self.h = random_complex(np.random.default_rng(2), 8, 3)

    def test_exact(self):
        self.assertEqual(nmse(self.h, self.h), (0.0, float('-inf')))

    def test_zero_estimate(self):
        ratio, db = nmse(np.zeros_like(self.h), self.h)
        self.assertAlmostEqual(ratio, 1.0)
        self.assertAlmostEqual(db, 0.0)

    def test_doubled(self):
        ratio, db = nmse(2 * self.h, self.h)
        self.assertAlmostEqual(ratio, 1.0)
        self.assertAlmostEqual(db, 0.0)

    def test_zero_truth(self):
        with self.assertRaises(ZeroNormTruth):
            nmse(self.h, np.zeros_like(self.h))

    def test_channel_matrices(self):
        a = ChannelMatrix(self.h, Domain.ANGLE_DELAY)
        self.assertEqual(nmse(a, a)[0], 0.0)


class RunTurboTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(21)
        self.prior = BGPrior(pi=0.1, sigma2_h=0.5)

    def test_noiseless_full_sampling(self):
        op = make_sensing_operator(64, 64, SensingKind.DFT_RP, seed=1)
        h = sparse_channel(self.rng, 64, 4)
        y = observe(op, h, 0.0, rng=2)
        result = run_turbo(op, y, IidDenoiser(self.prior), truth=h)
        self.assertLess(result.nmse_trace_db[0], -200)
        self.assertLess(result.final_nmse_db, -200)

    def test_identity_is_fixed_point(self):
        op = make_sensing_operator(32, 32, SensingKind.DFT_RP, seed=1)
        h = sparse_channel(self.rng, 32, 2)
        y = observe(op, h, 0.01, rng=3)
        result = run_turbo(op, y, IdentityDenoiser(), truth=h)
        self.assertTrue(result.converged)
        self.assertEqual(result.iterations_used, 2)
        assert_allclose(
            result.nmse_trace_db[1], result.nmse_trace_db[0], atol=1e-9
        )

    def test_sparse_recovery_improves(self):
        op = make_sensing_operator(256, 128, SensingKind.DFT_RP, seed=5)
        h = sparse_channel(self.rng, 256, 2)
        y = observe(op, h, 1e-4, rng=6)
        result = run_turbo(
            op, y, IidDenoiser(BGPrior(pi=0.1, sigma2_h=1.0)), truth=h
        )
        self.assertLess(result.final_nmse_db, result.nmse_trace_db[0] - 3)
        self.assertLess(result.final_nmse_db, -20)

    def test_shared_equals_per_tap_operators(self):
        op = make_sensing_operator(64, 32, SensingKind.DFT_RP, seed=8)
        h = sparse_channel(self.rng, 64, 3)
        y = observe(op, h, 1e-3, rng=9)
        config = TurboConfig(max_iters=5)
        shared = run_turbo(op, y, IidDenoiser(self.prior), config, truth=h)
        per_tap = run_turbo(
            [op] * 3, y, IidDenoiser(self.prior), config, truth=h
        )
        assert_allclose(shared.h_hat.values, per_tap.h_hat.values)

    def test_determinism(self):
        op = make_sensing_operator(64, 32, SensingKind.DFT_RP, seed=8)
        h = sparse_channel(self.rng, 64, 3)
        y = observe(op, h, 1e-3, rng=9)
        first = run_turbo(op, y, IidDenoiser(self.prior), truth=h, seed=4)
        second = run_turbo(op, y, IidDenoiser(self.prior), truth=h, seed=4)
        np.testing.assert_array_equal(first.h_hat.values, second.h_hat.values)
        self.assertEqual(first.nmse_trace_db, second.nmse_trace_db)

    def test_domain_mismatch(self):
        op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=8)
        h = ChannelMatrix(np.ones((16, 2)), Domain.ANGLE_DELAY)
        y = observe(op, h, 0.1, rng=1)
        with self.assertRaises(DomainMismatch):
            run_turbo(op, y, IidDenoiser(self.prior))

    def test_divergence(self):
        op = make_sensing_operator(16, 8, SensingKind.DFT_RP, seed=8)
        y = observe(op, sparse_channel(self.rng, 16, 2), 0.1, rng=1)
        with self.assertRaises(DivergenceError) as cm:
            run_turbo(op, y, ExplodingDenoiser())
        self.assertEqual(cm.exception.iteration, 1)
        self.assertEqual(cm.exception.stage, 'module B')

    def test_serialization(self):
        op = make_sensing_operator(32, 32, SensingKind.DFT_RP, seed=1)
        h = sparse_channel(self.rng, 32, 2)
        y = observe(op, h, 0.0, rng=3)
        result = run_turbo(
            op, y, IidDenoiser(self.prior), TurboConfig(max_iters=2),
            truth=h, seed=11,
        )
        data = json.loads(result.to_json())
        self.assertEqual(data['seed'], 11)
        self.assertEqual(len(data['nmse_trace_db']), result.iterations_used)

        lines = result.trace_csv().splitlines()
        self.assertEqual(lines[0], 'iteration,nmse_db')
        self.assertEqual(len(lines), result.iterations_used + 1)
        self.assertTrue(lines[1].startswith('1,'))

    def test_initial_variance(self):
        denoiser = IidDenoiser(self.prior)
        assert_allclose(initial_variance(denoiser, 3), [0.05] * 3)
        assert_allclose(initial_variance(denoiser, 3, FixedLearner()), 1.0)
        assert_allclose(initial_variance(IdentityDenoiser(), 2), 1.0)

    def test_learning_run_starts_from_unit_variance(self):
        # with M = N/2 and no noise the first Module B input variance
        # equals the first Module A prior variance
        op = make_sensing_operator(64, 32, SensingKind.DFT_RP, seed=8)
        h = sparse_channel(self.rng, 64, 2)
        y = observe(op, h, 0.0, rng=9)
        config = TurboConfig(max_iters=1)

        known = RecordingDenoiser(self.prior)
        run_turbo(op, y, known, config)
        assert_allclose(known.calls[0], [0.05, 0.05])

        learned = RecordingDenoiser(self.prior)
        run_turbo(op, y, learned, config, learner=FixedLearner())
        assert_allclose(learned.calls[0], [1.0, 1.0])

    def test_damped_recovery(self):
        op = make_sensing_operator(256, 128, SensingKind.DFT_RP, seed=5)
        h = sparse_channel(self.rng, 256, 2)
        y = observe(op, h, 1e-4, rng=6)
        result = run_turbo(
            op,
            y,
            IidDenoiser(BGPrior(pi=0.1, sigma2_h=1.0)),
            TurboConfig(damping=0.7),
            truth=h,
        )
        self.assertLess(result.final_nmse_db, -20)

    def test_config_validation(self):
        with self.assertRaises(ValueError):
            TurboConfig(damping=0.0)
        with self.assertRaises(ValueError):
            TurboConfig(max_iters=0)
