""" Partial DFT sensing operators

The sensing operator is A = S F R, with F the unitary N-point DFT, R a
permutation and S a selection of M rows. Operators are stored through their
index vectors only and applied with FFTs. """

import enum
from dataclasses import dataclass

import numpy as np
from scipy import fft


# Exceptions


class OperatorError(ValueError):
    """ Base class for sensing operator errors """


class DimensionMismatch(OperatorError):
    """ An input does not have the dimension the operator expects """


class InvalidOperatorSpec(OperatorError):
    """ The requested operator can not be constructed """


class DescriptorError(OperatorError):
    """ An operator descriptor could not be parsed """


class Direction(enum.Enum):
    FORWARD = 'forward'
    INVERSE = 'inverse'


class SensingKind(enum.Enum):
    """ Partial DFT (random rows) or partial DFT with random permutation """

    DFT = 'DFT'
    DFT_RP = 'DFT_RP'


# largest operator that may be materialized as a dense matrix
MATERIALIZE_LIMIT = 64


def dft(v, direction=Direction.FORWARD, n=None):
    """ Unitary DFT along the first axis

    >>> np.allclose(dft(np.ones(4)), [2, 0, 0, 0])
    True
    """
    v = np.asarray(v)
    if n is not None and v.shape[0] != n:
        raise DimensionMismatch(
            'expected length {n}, got {got}'.format(n=n, got=v.shape[0])
        )

    if Direction(direction) == Direction.FORWARD:
        return fft.fft(v, axis=0, norm='ortho')
    return fft.ifft(v, axis=0, norm='ortho')


@dataclass(frozen=True, eq=False)
class SensingOperator:
    """ The implicit operator A = S F R """

    n: int
    m: int
    row_selection: np.ndarray
    permutation: np.ndarray
    kind: SensingKind
    seed: int

    def __post_init__(self):
        rows = np.asarray(self.row_selection, dtype=np.int64)
        perm = np.asarray(self.permutation, dtype=np.int64)

        if rows.shape != (self.m,) or perm.shape != (self.n,):
            raise InvalidOperatorSpec('index vectors have the wrong length')

        if len(np.unique(rows)) != self.m or rows.min(initial=0) < 0:
            raise InvalidOperatorSpec('row selection must be distinct')

        if rows.max(initial=0) >= self.n:
            raise InvalidOperatorSpec('row selection out of range')

        if not np.array_equal(np.sort(perm), np.arange(self.n)):
            raise InvalidOperatorSpec('permutation is not a bijection')

        rows.setflags(write=False)
        perm.setflags(write=False)
        object.__setattr__(self, 'row_selection', rows)
        object.__setattr__(self, 'permutation', perm)

    @property
    def ratio(self):
        """ The sampling ratio M/N """
        return self.m / self.n

    def __eq__(self, other):
        if not isinstance(other, SensingOperator):
            return NotImplemented

        return (
            (self.n, self.m, self.kind, self.seed)
            == (other.n, other.m, other.kind, other.seed)
            and np.array_equal(self.row_selection, other.row_selection)
            and np.array_equal(self.permutation, other.permutation)
        )

    def __hash__(self):
        return hash((self.n, self.m, self.kind, self.seed))


def make_sensing_operator(n, m, kind=SensingKind.DFT_RP, seed=0):
    """ Draw a partial DFT(-RP) operator from a seeded RNG

    The m rows are drawn without replacement and in random order; DFT_RP
    additionally draws a uniform random permutation. """
    kind = SensingKind(kind)

    if n < 1 or not 1 <= m <= n:
        raise InvalidOperatorSpec(
            'need 1 <= m <= n, got m={m}, n={n}'.format(m=m, n=n)
        )

    rng = np.random.default_rng(seed)
    row_selection = rng.permutation(n)[:m]

    if kind == SensingKind.DFT_RP:
        permutation = rng.permutation(n)
    else:
        permutation = np.arange(n)

    return SensingOperator(
        n=n,
        m=m,
        row_selection=row_selection,
        permutation=permutation,
        kind=kind,
        seed=seed,
    )


def apply_forward(op, x):
    """ y = A x, for a vector or for each column of a matrix """
    x = np.asarray(x)
    if x.shape[0] != op.n:
        raise DimensionMismatch(
            'operator expects {n} rows, got {got}'.format(
                n=op.n, got=x.shape[0]
            )
        )

    spectrum = fft.fft(x[op.permutation], axis=0, norm='ortho')
    return spectrum[op.row_selection]


def apply_adjoint(op, y):
    """ x = A^H y, for a vector or for each column of a matrix """
    y = np.asarray(y)
    if y.shape[0] != op.m:
        raise DimensionMismatch(
            'adjoint expects {m} rows, got {got}'.format(
                m=op.m, got=y.shape[0]
            )
        )

    full = np.zeros((op.n,) + y.shape[1:], dtype=np.complex128)
    full[op.row_selection] = y
    permuted = fft.ifft(full, axis=0, norm='ortho')

    x = np.empty_like(permuted)
    x[op.permutation] = permuted
    return x


def materialize(op):
    """ The dense M x N matrix of a small operator (test oracle) """
    if op.n > MATERIALIZE_LIMIT:
        raise InvalidOperatorSpec(
            'refusing to materialize an operator with n={n} > {limit}'.format(
                n=op.n, limit=MATERIALIZE_LIMIT
            )
        )

    return apply_forward(op, np.eye(op.n, dtype=np.complex128))
