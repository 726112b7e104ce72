import numpy as np

from django.test import SimpleTestCase

from stcsim.chanmodel import ChannelGenSpec, Domain
from stcsim.engine import IdentityDenoiser, IidDenoiser
from stcsim.ds import DsParams, DelaySupportDenoiser
from stcsim.priors import BGPrior
from . import (
    InsufficientTrials,
    StateEvolutionError,
    se_module_a,
    se_module_b_mc,
    se_fixed_point,
)


SPEC = ChannelGenSpec(n=32, p_taps=4, l_max=2, p10=0.1, p01=0.3)


def iid_denoiser():
    return IidDenoiser(BGPrior(pi=0.3, sigma2_h=0.5))


class ModuleATests(SimpleTestCase):
    def test_noiseless_prior(self):
        step = se_module_a(0.0, 1e-3, 103, 256)
        self.assertAlmostEqual(step.tau_b, 256 / 103 * 1e-3)
        self.assertFalse(step.clamped)

    def test_full_measurements(self):
        self.assertAlmostEqual(se_module_a(0.7, 0.2, 64, 64).tau_b, 0.2)

    def test_closed_form(self):
        step = se_module_a(0.01, 1e-3, 103, 256)
        self.assertAlmostEqual(step.tau_b, 0.01734, places=5)

    def test_affine_increasing(self):
        values = [se_module_a(t, 0.01, 40, 100).tau_b for t in (0.1, 0.2, 0.3)]
        self.assertLess(values[0], values[1])
        self.assertAlmostEqual(values[1] - values[0], values[2] - values[1])

    def test_clamp(self):
        step = se_module_a(0.5, 0.0, 16, 16)
        self.assertTrue(step.clamped)
        self.assertEqual(step.tau_b, 1e-13)

    def test_invalid(self):
        with self.assertRaises(StateEvolutionError):
            se_module_a(0.1, 0.1, 20, 10)
        with self.assertRaises(StateEvolutionError):
            se_module_a(-0.1, 0.1, 5, 10)


class ModuleBTests(SimpleTestCase):
    def test_identity_passthrough(self):
        estimate = se_module_b_mc(0.3, IdentityDenoiser(), SPEC, trials=5)
        self.assertEqual(estimate.tau_a, 0.3)
        self.assertEqual(estimate.stderr, 0.0)

    def test_no_trials(self):
        with self.assertRaises(InsufficientTrials):
            se_module_b_mc(0.1, iid_denoiser(), SPEC, trials=0)

    def test_nonpositive_tau(self):
        with self.assertRaises(StateEvolutionError):
            se_module_b_mc(0.0, iid_denoiser(), SPEC, trials=3)

    def test_noiseless_limit(self):
        estimate = se_module_b_mc(
            1e-10, iid_denoiser(), SPEC, trials=20, rng=1
        )
        self.assertLess(estimate.tau_a, 1e-6)
        self.assertLess(estimate.posterior_mse, 1e-6)

    def test_deterministic(self):
        first = se_module_b_mc(0.1, iid_denoiser(), SPEC, trials=10, rng=4)
        second = se_module_b_mc(0.1, iid_denoiser(), SPEC, trials=10, rng=4)
        self.assertEqual(first, second)

    def test_monotone(self):
        low = se_module_b_mc(0.01, iid_denoiser(), SPEC, trials=50, rng=2)
        high = se_module_b_mc(1.0, iid_denoiser(), SPEC, trials=50, rng=2)
        self.assertLess(
            low.tau_a + 3 * low.stderr, high.tau_a - 3 * high.stderr
        )

    def test_self_consistency(self):
        denoiser = DelaySupportDenoiser(
            DsParams(lambda_d=0.25, p01=0.3, sigma2_d=1.0,
                     gamma=[0.9, 0.9, 0.1, 0.1])
        )
        first = se_module_b_mc(0.1, denoiser, SPEC, trials=100, rng=1)
        second = se_module_b_mc(0.1, denoiser, SPEC, trials=100, rng=2)
        slack = 4 * np.hypot(first.stderr, second.stderr)
        self.assertLess(abs(first.tau_a - second.tau_a), slack)
        self.assertGreater(first.stderr, 0)


class FixedPointTests(SimpleTestCase):
    def test_noiseless_full_sampling(self):
        state = se_fixed_point(0.0, 32, 32, iid_denoiser(), SPEC, trials=10,
                               rng=0)
        self.assertTrue(state.converged)
        self.assertTrue(state.clamped)
        self.assertLess(state.tau_a, 1e-9)

    def test_noisy_prediction(self):
        state = se_fixed_point(0.01, 16, 32, iid_denoiser(), SPEC,
                               trials=20, max_iter=30, rng=0)
        self.assertEqual(state.signal_power, SPEC.mean_entry_power())
        self.assertLess(state.predicted_nmse, 1.0)
        self.assertGreater(state.predicted_posterior_nmse, 0.0)
        self.assertEqual(len(state.predicted_trace_db()),
                         len(state.trajectory))

    def test_identity_full_sampling(self):
        identity = IdentityDenoiser(Domain.ANGLE_DELAY)
        state = se_fixed_point(0.25, 8, 8, identity, SPEC, trials=1)
        self.assertTrue(state.converged)
        self.assertAlmostEqual(state.tau_a, 0.25)

    def test_zero_power(self):
        with self.assertRaises(StateEvolutionError):
            se_fixed_point(0.1, 16, 32, iid_denoiser(), SPEC.replace(l_max=0))

    def test_csv(self):
        state = se_fixed_point(0.01, 16, 32, iid_denoiser(), SPEC,
                               trials=5, max_iter=3, rng=0)
        lines = state.to_csv().splitlines()
        self.assertEqual(lines[0], 'iter,tau_A,tau_B,mc_stderr')
        self.assertEqual(len(lines), len(state.trajectory) + 1)
        self.assertTrue(lines[1].startswith('1,'))
