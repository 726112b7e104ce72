import numpy as np
from numpy.testing import assert_allclose

from django.test import SimpleTestCase

from . import (
    Direction,
    SensingKind,
    DimensionMismatch,
    InvalidOperatorSpec,
    DescriptorError,
    dft,
    make_sensing_operator,
    apply_forward,
    apply_adjoint,
    materialize,
    to_descriptor,
    from_descriptor,
)


def random_complex(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


class DftTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_dc_only(self):
        assert_allclose(dft(np.ones(4), Direction.FORWARD), [2, 0, 0, 0])

    def test_unitary(self):
        v = random_complex(self.rng, 32)
        self.assertAlmostEqual(
            np.linalg.norm(dft(v)), np.linalg.norm(v), places=12
        )

    def test_round_trip(self):
        v = random_complex(self.rng, 8)
        assert_allclose(dft(dft(v), 'inverse'), v, atol=1e-12)

    def test_dimension_mismatch(self):
        with self.assertRaises(DimensionMismatch):
            dft(np.ones(5), n=4)


class SensingOperatorTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(3)

    def test_full_dft_is_unitary(self):
        op = make_sensing_operator(4, 4, SensingKind.DFT, seed=5)
        a = materialize(op)
        assert_allclose(a @ a.conj().T, np.eye(4), atol=1e-12)
        assert_allclose(op.permutation, np.arange(4))

    def test_determinism(self):
        op1 = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=7)
        op2 = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=7)
        self.assertEqual(op1, op2)
        np.testing.assert_array_equal(op1.row_selection, op2.row_selection)
        np.testing.assert_array_equal(op1.permutation, op2.permutation)

    def test_other_seed_differs(self):
        op1 = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=7)
        op2 = make_sensing_operator(256, 103, SensingKind.DFT_RP, seed=8)
        self.assertNotEqual(op1, op2)

    def test_rows_orthonormal(self):
        for kind in SensingKind:
            for n, m in [(8, 3), (64, 26)]:
                op = make_sensing_operator(n, m, kind, seed=n + m)
                a = materialize(op)
                err = np.linalg.norm(a @ a.conj().T - np.eye(m))
                self.assertLess(err, 1e-10)

    def test_rows_orthonormal_large(self):
        # A A^H applied column by column, without materializing A
        for kind in SensingKind:
            op = make_sensing_operator(256, 103, kind, seed=1)
            gram = apply_forward(op, apply_adjoint(op, np.eye(103)))
            self.assertLess(np.linalg.norm(gram - np.eye(103)), 1e-10)

    def test_m_greater_n(self):
        with self.assertRaises(InvalidOperatorSpec):
            make_sensing_operator(4, 5, SensingKind.DFT, seed=0)

    def test_materialize_limit(self):
        op = make_sensing_operator(128, 10, SensingKind.DFT, seed=0)
        with self.assertRaises(InvalidOperatorSpec):
            materialize(op)

    def test_forward_zero(self):
        op = make_sensing_operator(16, 6, SensingKind.DFT_RP, seed=2)
        assert_allclose(apply_forward(op, np.zeros(16)), np.zeros(6))

    def test_forward_basis_vector(self):
        op = make_sensing_operator(8, 8, SensingKind.DFT, seed=4)
        k = 3
        e_k = np.zeros(8)
        e_k[k] = 1.0
        column = np.exp(-2j * np.pi * np.arange(8) * k / 8) / np.sqrt(8)
        assert_allclose(
            apply_forward(op, e_k), column[op.row_selection], atol=1e-12
        )

    def test_forward_matches_matrix(self):
        for kind in SensingKind:
            op = make_sensing_operator(64, 26, kind, seed=9)
            x = random_complex(self.rng, 64)
            assert_allclose(
                apply_forward(op, x), materialize(op) @ x, atol=1e-12
            )

    def test_adjoint_matches_matrix(self):
        op = make_sensing_operator(8, 5, SensingKind.DFT_RP, seed=12)
        y = random_complex(self.rng, 5)
        assert_allclose(
            apply_adjoint(op, y), materialize(op).conj().T @ y, atol=1e-12
        )

    def test_adjoint_identity(self):
        op = make_sensing_operator(32, 13, SensingKind.DFT_RP, seed=6)
        x = random_complex(self.rng, 32)
        y = random_complex(self.rng, 13)
        lhs = np.vdot(y, apply_forward(op, x))
        rhs = np.vdot(apply_adjoint(op, y), x)
        self.assertAlmostEqual(lhs, rhs, places=12)

    def test_projection_bound(self):
        op = make_sensing_operator(32, 13, SensingKind.DFT_RP, seed=6)
        x = random_complex(self.rng, 32)
        quad = np.vdot(x, apply_adjoint(op, apply_forward(op, x)))
        self.assertAlmostEqual(quad.imag, 0.0, places=10)
        self.assertGreaterEqual(quad.real, 0.0)
        self.assertLessEqual(quad.real, np.vdot(x, x).real + 1e-10)

    def test_full_round_trip(self):
        op = make_sensing_operator(16, 16, SensingKind.DFT_RP, seed=6)
        x = random_complex(self.rng, 16)
        assert_allclose(
            apply_adjoint(op, apply_forward(op, x)), x, atol=1e-12
        )

    def test_linearity(self):
        op = make_sensing_operator(16, 7, SensingKind.DFT_RP, seed=6)
        x, z = random_complex(self.rng, 16), random_complex(self.rng, 16)
        alpha, beta = 0.5 - 2j, 3.0
        assert_allclose(
            apply_forward(op, alpha * x + beta * z),
            alpha * apply_forward(op, x) + beta * apply_forward(op, z),
            atol=1e-12,
        )

    def test_matrix_columns(self):
        op = make_sensing_operator(16, 7, SensingKind.DFT_RP, seed=6)
        x = random_complex(self.rng, 16, 3)
        y = apply_forward(op, x)
        self.assertEqual(y.shape, (7, 3))
        assert_allclose(y[:, 1], apply_forward(op, x[:, 1]))

    def test_dimension_mismatch(self):
        op = make_sensing_operator(16, 7, SensingKind.DFT_RP, seed=6)
        with self.assertRaises(DimensionMismatch):
            apply_forward(op, np.zeros(15))
        with self.assertRaises(DimensionMismatch):
            apply_adjoint(op, np.zeros(16))


class DescriptorTests(SimpleTestCase):
    def test_replay(self):
        op = make_sensing_operator(64, 26, SensingKind.DFT_RP, seed=21)
        self.assertEqual(from_descriptor(to_descriptor(op)), op)

    def test_comments_and_blank_lines(self):
        op = make_sensing_operator(8, 3, SensingKind.DFT, seed=2)
        text = '# operator\n\n' + to_descriptor(op) + '\n'
        self.assertEqual(from_descriptor(text), op)

    def test_missing_key(self):
        with self.assertRaises(DescriptorError):
            from_descriptor('n = 8\nm = 3\n')

    def test_unknown_key(self):
        op = make_sensing_operator(8, 3, SensingKind.DFT, seed=2)
        with self.assertRaises(DescriptorError):
            from_descriptor(to_descriptor(op) + '\ncolor = blue')

    def test_not_a_bijection(self):
        text = (
            'n = 4\nm = 2\nkind = DFT_RP\nseed = 0\n'
            'row_selection = 0,1\npermutation = 0,0,1,2'
        )
        with self.assertRaises(DescriptorError):
            from_descriptor(text)
