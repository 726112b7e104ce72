""" Synthetic structured channels and noisy observations

Channels are generated in the angle-delay domain: each of the first L delay
taps carries a clustered support drawn from a binary Markov chain, gated by
a per-tap activity flag. The angle-frequency representation is obtained with
the unitary P-point DFT across taps, H_f F^* = H_d. """

import enum
import logging
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy import fft

from stcsim.linops import apply_forward


logger = logging.getLogger(__name__)


# Exceptions


class ChannelError(ValueError):
    """ Base class for channel model errors """


class InvalidChannelSpec(ChannelError):
    """ The generator parameters are out of range """


class DomainError(ChannelError):
    """ A matrix is not in the domain an operation expects """


class ChannelDimensionError(ChannelError):
    """ A matrix does not match the dimensions of the sensing operator """


class Domain(enum.Enum):
    ANGLE_FREQUENCY = 'ANGLE_FREQUENCY'
    ANGLE_DELAY = 'ANGLE_DELAY'


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """ An N x P channel in the angle-frequency or angle-delay domain """

    values: np.ndarray
    domain: Domain

    @property
    def shape(self):
        return self.values.shape

    def power(self):
        """ The squared Frobenius norm """
        return float(np.sum(np.abs(self.values) ** 2))


@dataclass(frozen=True, eq=False)
class ObservationMatrix:
    """ M x P measurements Y = A H + W, in the domain of H """

    values: np.ndarray
    domain: Domain
    sigma2: float

    @property
    def shape(self):
        return self.values.shape


def _as_taps(value, p_taps, name):
    taps = np.broadcast_to(np.asarray(value, dtype=float), (p_taps,))
    if not np.all(np.isfinite(taps)):
        raise InvalidChannelSpec('{name} must be finite'.format(name=name))
    return taps.copy()


@dataclass(frozen=True, eq=False)
class ChannelGenSpec:
    """ Parameters of the synthetic angle-delay channel

    The defaults are the simulation setting with N=256 antennas, P=32
    pilot subcarriers, L=16 delay taps, p01=1/16 and p10=1/240. """

    n: int = 256
    p_taps: int = 32
    l_max: int = 16
    p10: float = 1 / 240
    p01: float = 1 / 16
    tap_variances: np.ndarray = 1.0
    gamma: np.ndarray = 1.0
    lambda0: float = None
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.p_taps < 1:
            raise InvalidChannelSpec('n and p_taps must be positive')

        if not 0 <= self.l_max <= self.p_taps:
            raise InvalidChannelSpec('need 0 <= l_max <= p_taps')

        for name in ('p10', 'p01'):
            value = getattr(self, name)
            if not 0 < value < 1:
                raise InvalidChannelSpec(
                    '{name} must be in (0, 1), got {value}'.format(
                        name=name, value=value
                    )
                )

        if self.lambda0 is not None and not 0 <= self.lambda0 <= 1:
            raise InvalidChannelSpec('lambda0 must be in [0, 1]')

        variances = _as_taps(self.tap_variances, self.p_taps, 'tap_variances')
        if np.any(variances <= 0):
            raise InvalidChannelSpec('tap variances must be positive')

        gamma = _as_taps(self.gamma, self.p_taps, 'gamma')
        if np.any((gamma < 0) | (gamma > 1)):
            raise InvalidChannelSpec('gamma must be in [0, 1]')

        object.__setattr__(self, 'tap_variances', variances)
        object.__setattr__(self, 'gamma', gamma)

    @property
    def activity(self):
        """ The stationary activity of the support chain """
        if self.lambda0 is not None:
            return self.lambda0
        return stationary_activity(self.p10, self.p01)

    def expected_power(self):
        """ E ||H||_F^2 of a generated channel """
        taps = slice(0, self.l_max)
        return float(
            self.n
            * self.activity
            * np.sum(self.gamma[taps] * self.tap_variances[taps])
        )

    def mean_entry_power(self):
        """ E ||H||_F^2 / (N P) """
        return self.expected_power() / (self.n * self.p_taps)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


def stationary_activity(p10, p01):
    """ lambda = (1 + p01/p10)^-1

    >>> round(stationary_activity(1 / 240, 1 / 16), 12)
    0.0625
    """
    return 1.0 / (1.0 + p01 / p10)


def sample_support_chains(n, count, p10, p01, lambda0=None, rng=None,
                          initial=None):
    """ Draw `count` independent binary Markov chains of length n

    Returns a boolean array of shape (n, count). `initial` forces the first
    state of every chain. """
    if not (0 < p10 < 1 and 0 < p01 < 1):
        raise InvalidChannelSpec('transition probabilities must be in (0, 1)')

    if lambda0 is None:
        lambda0 = stationary_activity(p10, p01)

    if not 0 <= lambda0 <= 1:
        raise InvalidChannelSpec('lambda0 must be in [0, 1]')

    rng = np.random.default_rng(rng)
    u = rng.random((n, count))

    s = np.zeros((n, count), dtype=bool)
    if initial is None:
        s[0] = u[0] < lambda0
    else:
        s[0] = bool(initial)

    for i in range(1, n):
        # P(s_i = 1 | s_{i-1}) is 1 - p01 after a one and p10 after a zero
        p_one = np.where(s[i - 1], 1.0 - p01, p10)
        s[i] = u[i] < p_one

    return s


def sample_support_chain(n, p10, p01, lambda0=None, rng=None, initial=None):
    """ Draw one binary support vector of length n """
    return sample_support_chains(
        n, 1, p10, p01, lambda0=lambda0, rng=rng, initial=initial
    )[:, 0]


def generate_channel(spec, rng=None):
    """ Draw an angle-delay channel H_d from the generator spec

    Taps beyond l_max are exactly zero. Every active tap carries its own
    support chain; its nonzero entries are CN(0, tap variance). """
    rng = np.random.default_rng(spec.seed if rng is None else rng)

    values = np.zeros((spec.n, spec.p_taps), dtype=np.complex128)
    taps = spec.l_max
    if taps == 0:
        return ChannelMatrix(values, Domain.ANGLE_DELAY)

    active = rng.random(taps) < spec.gamma[:taps]
    support = sample_support_chains(
        spec.n, taps, spec.p10, spec.p01, lambda0=spec.lambda0, rng=rng
    )
    support &= active[np.newaxis, :]

    std = np.sqrt(spec.tap_variances[:taps] / 2)
    gains = std * (
        rng.standard_normal((spec.n, taps))
        + 1j * rng.standard_normal((spec.n, taps))
    )
    values[:, :taps] = np.where(support, gains, 0)
    logger.debug(
        'generated channel: %d of %d taps active, %d nonzero entries',
        active.sum(),
        taps,
        support.sum(),
    )

    return ChannelMatrix(values, Domain.ANGLE_DELAY)


def delay_to_freq(matrix):
    """ H_f = H_d F, the inverse of freq_to_delay """
    if matrix.domain != Domain.ANGLE_DELAY:
        raise DomainError(
            'expected an angle-delay matrix, got {domain}'.format(
                domain=matrix.domain.value
            )
        )

    values = fft.fft(matrix.values, axis=1, norm='ortho')
    return dataclasses.replace(
        matrix, values=values, domain=Domain.ANGLE_FREQUENCY
    )


def freq_to_delay(matrix):
    """ H_d = H_f F^*, with F the unitary P-point DFT matrix """
    if matrix.domain != Domain.ANGLE_FREQUENCY:
        raise DomainError(
            'expected an angle-frequency matrix, got {domain}'.format(
                domain=matrix.domain.value
            )
        )

    values = fft.ifft(matrix.values, axis=1, norm='ortho')
    return dataclasses.replace(
        matrix, values=values, domain=Domain.ANGLE_DELAY
    )


def to_domain(matrix, domain):
    """ Convert a channel or observation matrix to `domain` if needed """
    domain = Domain(domain)
    if matrix.domain == domain:
        return matrix

    if domain == Domain.ANGLE_DELAY:
        return freq_to_delay(matrix)
    return delay_to_freq(matrix)


def noise_variance(signal_power, snr_db):
    """ sigma^2 for a mean entry power and an SNR in dB

    With row-orthonormal A, E||A H||^2 / (M P) equals E||H||^2 / (N P), so
    the SNR is the ratio of the mean entry power to sigma^2. An infinite
    SNR gives noiseless observations.

    >>> noise_variance(1.0, 30.0)
    0.001
    >>> noise_variance(2.0, float('inf'))
    0.0
    """
    if np.isposinf(snr_db):
        return 0.0
    return float(signal_power / 10 ** (snr_db / 10))


def observe(ops, matrix, sigma2, rng=None):
    """ Y = A H + W with W i.i.d. CN(0, sigma2), column by column

    `ops` is a single operator shared by all columns or a sequence of one
    operator per column. """
    values = np.asarray(matrix.values)
    n, p_taps = values.shape

    if sigma2 < 0:
        raise ChannelError('noise variance must be nonnegative')

    shared = not isinstance(ops, (list, tuple))
    if not shared and len(ops) != p_taps:
        raise ChannelDimensionError(
            'need one operator per column, got {count} for {p} columns'
            .format(count=len(ops), p=p_taps)
        )

    first = ops if shared else ops[0]
    if first.n != n:
        raise ChannelDimensionError(
            'operator expects {expected} rows, channel has {n}'.format(
                expected=first.n, n=n
            )
        )

    if shared:
        clean = apply_forward(ops, values)
    else:
        clean = np.column_stack(
            [apply_forward(op, values[:, p]) for p, op in enumerate(ops)]
        )

    rng = np.random.default_rng(rng)
    noise = np.sqrt(sigma2 / 2) * (
        rng.standard_normal(clean.shape)
        + 1j * rng.standard_normal(clean.shape)
    )

    return ObservationMatrix(clean + noise, matrix.domain, float(sigma2))
