import os
import tempfile

import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from stcsim.linops import SensingKind, apply_forward, make_sensing_operator
from . import (
    Domain,
    ChannelMatrix,
    ChannelGenSpec,
    InvalidChannelSpec,
    DomainError,
    ChannelDimensionError,
    ChannelFormatError,
    sample_support_chain,
    sample_support_chains,
    generate_channel,
    delay_to_freq,
    freq_to_delay,
    observe,
)
from . import formats


class SupportChainTests(SimpleTestCase):
    def test_stationary_activity(self):
        rng = np.random.default_rng(1)
        s = sample_support_chains(10000, 100, 1 / 240, 1 / 16, rng=rng)

        # chains of 1e4 positions decorrelate after a few hundred steps, so
        # the spread is judged per chain rather than per draw
        means = s.mean(axis=0)
        stderr = means.std(ddof=1) / np.sqrt(len(means))
        self.assertLess(abs(means.mean() - 1 / 16), 3 * stderr + 1e-3)

    def test_run_length(self):
        rng = np.random.default_rng(2)
        s = sample_support_chain(200000, 0.05, 1 / 16, rng=rng)
        padded = np.concatenate([[0], s.astype(int), [0]])
        starts = np.flatnonzero(np.diff(padded) == 1)
        ends = np.flatnonzero(np.diff(padded) == -1)
        mean_run = np.mean(ends - starts)
        self.assertAlmostEqual(mean_run, 16, delta=1.0)

    def test_absorbing(self):
        s = sample_support_chain(500, 1e-300, 0.5, rng=3, initial=0)
        self.assertFalse(s.any())

    def test_invalid_probabilities(self):
        with self.assertRaises(InvalidChannelSpec):
            sample_support_chain(10, 0.0, 0.5)
        with self.assertRaises(InvalidChannelSpec):
            sample_support_chain(10, 0.5, 1.0)


class GenerateChannelTests(SimpleTestCase):
    def test_gamma_zero(self):
        h = generate_channel(ChannelGenSpec(gamma=0.0), rng=4)
        self.assertFalse(np.any(h.values))
        self.assertEqual(h.domain, Domain.ANGLE_DELAY)

    def test_taps_beyond_delay_spread(self):
        h = generate_channel(ChannelGenSpec(), rng=5)
        self.assertEqual(h.shape, (256, 32))
        self.assertFalse(np.any(h.values[:, 16:]))

    def test_nonzero_rows_per_tap(self):
        spec = ChannelGenSpec()
        rng = np.random.default_rng(6)
        counts = [
            np.count_nonzero(generate_channel(spec, rng).values[:, :16])
            for _ in range(100)
        ]
        # 16 nonzero rows expected per active tap
        self.assertAlmostEqual(np.mean(counts) / 16, 16, delta=2.5)

    def test_nonzero_variance(self):
        spec = ChannelGenSpec(tap_variances=np.linspace(0.5, 2, 32))
        rng = np.random.default_rng(7)
        samples = [[] for _ in range(16)]
        for _ in range(100):
            h = generate_channel(spec, rng).values
            for p in range(16):
                samples[p].extend(np.abs(h[h[:, p] != 0, p]) ** 2)

        for p in (0, 15):
            power = np.array(samples[p])
            stderr = power.std() / np.sqrt(len(power))
            self.assertLess(
                abs(power.mean() - spec.tap_variances[p]), 4 * stderr
            )

    def test_seeded_determinism(self):
        spec = ChannelGenSpec(seed=12)
        np.testing.assert_array_equal(
            generate_channel(spec).values, generate_channel(spec).values
        )

    def test_expected_power(self):
        spec = ChannelGenSpec()
        self.assertAlmostEqual(spec.expected_power(), 256 * 16 / 16)
        self.assertAlmostEqual(spec.mean_entry_power(), 1 / 32)

    def test_invalid_spec(self):
        with self.assertRaises(InvalidChannelSpec):
            ChannelGenSpec(l_max=33)
        with self.assertRaises(InvalidChannelSpec):
            ChannelGenSpec(p01=1.0)
        with self.assertRaises(InvalidChannelSpec):
            ChannelGenSpec(tap_variances=0.0)


class DomainTests(SimpleTestCase):
    def setUp(self):
        self.h = generate_channel(ChannelGenSpec(n=32, p_taps=8, l_max=4), 8)

    def test_round_trip(self):
        back = freq_to_delay(delay_to_freq(self.h))
        assert_allclose(back.values, self.h.values, atol=1e-12)
        self.assertEqual(back.domain, Domain.ANGLE_DELAY)

    def test_norm_preserved(self):
        hf = delay_to_freq(self.h)
        self.assertAlmostEqual(hf.power(), self.h.power(), places=10)

    def test_common_frequency_support(self):
        values = np.zeros((16, 8), dtype=complex)
        values[[2, 3, 9], 0] = [1.0, -2j, 0.5]
        hf = delay_to_freq(ChannelMatrix(values, Domain.ANGLE_DELAY)).values
        support = np.abs(hf) > 1e-12
        for p in range(8):
            np.testing.assert_array_equal(support[:, p], support[:, 0])

    def test_wrong_domain(self):
        with self.assertRaises(DomainError):
            freq_to_delay(self.h)
        with self.assertRaises(DomainError):
            delay_to_freq(delay_to_freq(self.h))


class ObserveTests(SimpleTestCase):
    def setUp(self):
        self.op = make_sensing_operator(64, 26, SensingKind.DFT_RP, seed=1)
        spec = ChannelGenSpec(n=64, p_taps=8, l_max=4)
        self.h = generate_channel(spec, rng=2)

    def test_noiseless(self):
        y = observe(self.op, self.h, 0.0, rng=3)
        assert_allclose(y.values, apply_forward(self.op, self.h.values))
        self.assertEqual(y.domain, Domain.ANGLE_DELAY)

    def test_noise_variance(self):
        op = make_sensing_operator(256, 256, SensingKind.DFT, seed=1)
        zero = ChannelMatrix(np.zeros((256, 32)), Domain.ANGLE_DELAY)
        y = observe(op, zero, 0.25, rng=4)
        power = np.abs(y.values) ** 2
        stderr = power.std() / np.sqrt(power.size)
        self.assertLess(abs(power.mean() - 0.25), 4 * stderr)

    def test_transform_commutes(self):
        yf = observe(self.op, delay_to_freq(self.h), 0.0, rng=5)
        yd = observe(self.op, self.h, 0.0, rng=5)
        assert_allclose(freq_to_delay(yf).values, yd.values, atol=1e-12)

    def test_dimension_mismatch(self):
        op = make_sensing_operator(32, 8, SensingKind.DFT_RP, seed=1)
        with self.assertRaises(ChannelDimensionError):
            observe(op, self.h, 0.1)

    def test_per_column_operators(self):
        ops = [
            make_sensing_operator(64, 26, SensingKind.DFT_RP, seed=p)
            for p in range(8)
        ]
        y = observe(ops, self.h, 0.0)
        assert_allclose(
            y.values[:, 5], apply_forward(ops[5], self.h.values[:, 5])
        )


class FormatTests(SimpleTestCase):
    def setUp(self):
        self.h = generate_channel(ChannelGenSpec(n=16, p_taps=4, l_max=2), 9)
        self.dir = tempfile.mkdtemp()

    def test_text_round_trip(self):
        path = os.path.join(self.dir, 'h.txt')
        formats.save(self.h, path)
        loaded = formats.load(path)
        np.testing.assert_array_equal(loaded.values, self.h.values)
        self.assertEqual(loaded.domain, self.h.domain)

    def test_binary_round_trip(self):
        path = os.path.join(self.dir, 'h.bin')
        formats.save(delay_to_freq(self.h), path, binary=True)
        loaded = formats.load(path)
        np.testing.assert_array_equal(
            loaded.values, delay_to_freq(self.h).values
        )
        self.assertEqual(loaded.domain, Domain.ANGLE_FREQUENCY)

    def test_binary_header(self):
        data = formats.to_bytes(self.h)
        self.assertEqual(len(formats.MAGIC), 16)
        self.assertEqual(len(data), 16 + 24 + 16 * 4 * 16)

    def test_malformed_text(self):
        with self.assertRaises(ChannelFormatError):
            formats.parse_text('2 1 ANGLE_DELAY\n1.0,2.0\n')
        with self.assertRaises(ChannelFormatError):
            formats.parse_text('2 1 SOMEWHERE\n1.0,2.0\n0,0\n')

    def test_truncated_binary(self):
        with self.assertRaises(ChannelFormatError):
            formats.from_bytes(formats.to_bytes(self.h)[:-8])
