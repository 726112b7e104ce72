""" Module A (LMMSE over a row-orthonormal operator) and the Gaussian
extrinsic message calculus shared by both turbo modules """

import logging
from typing import NamedTuple

import numpy as np

from stcsim.linops import apply_forward, apply_adjoint
from .exceptions import ModuleAError, ZeroNormTruth


logger = logging.getLogger(__name__)


V_MIN = 1e-13
V_MAX = 1e13


class ExtrinsicState(NamedTuple):
    """ Per-tap extrinsic means and variances

    `degenerate` flags taps whose posterior was not more certain than the
    prior; their variance is set to v_max and their mean to the posterior
    mean. """

    mean: np.ndarray
    variance: np.ndarray
    degenerate: np.ndarray


def lmmse_update(op, y, h_pri, v_pri, sigma2, v_min=V_MIN, v_max=V_MAX):
    """ Posterior of h given y = A h + w and the prior CN(h_pri, v_pri)

    `y` and `h_pri` are vectors or matrices with one column per tap; `v_pri`
    is a scalar or one value per column. With A A^H = I the posterior is

        h_post = h_pri + v/(v + sigma2) A^H (y - A h_pri)
        v_post = v - (M/N) v^2 / (v + sigma2)

    >>> from stcsim.linops import make_sensing_operator
    >>> op = make_sensing_operator(4, 2, 'DFT', 0)
    >>> _, v_post = lmmse_update(op, np.zeros(2), np.zeros(4), 1.0, 0.0)
    >>> float(v_post)
    0.5
    """
    v_pri = np.asarray(v_pri, dtype=float)
    if np.any(v_pri <= 0) or not np.all(np.isfinite(v_pri)):
        raise ModuleAError('prior variance must be positive and finite')

    if sigma2 < 0:
        raise ModuleAError('noise variance must be nonnegative')

    residual = y - apply_forward(op, h_pri)
    gain = v_pri / (v_pri + sigma2)
    h_post = h_pri + gain * apply_adjoint(op, residual)
    v_post = v_pri - op.ratio * v_pri * gain
    return h_post, np.clip(v_post, v_min, v_max)


def extrinsic(h_post, v_post, h_pri, v_pri, v_min=V_MIN, v_max=V_MAX):
    """ Divide the posterior by the prior

    v_ext = (1/v_post - 1/v_pri)^-1 and
    h_ext = v_ext (h_post/v_post - h_pri/v_pri).

    >>> state = extrinsic(np.ones(2), 0.5, np.zeros(2), 1.0)
    >>> float(state.variance), state.mean.tolist()
    (1.0, [2.0, 2.0])
    """
    v_post = np.asarray(v_post, dtype=float)
    v_pri = np.asarray(v_pri, dtype=float)
    degenerate = v_post >= v_pri

    with np.errstate(divide='ignore', invalid='ignore'):
        v_ext = np.where(
            degenerate, v_max, v_post * v_pri / (v_pri - v_post)
        )
        v_ext = np.clip(v_ext, v_min, v_max)
        h_ext = v_ext * (h_post / v_post - h_pri / v_pri)

    h_ext = np.where(degenerate, h_post, h_ext)

    if np.any(degenerate):
        logger.debug(
            'degenerate extrinsic step on %d of %d taps',
            np.count_nonzero(degenerate),
            degenerate.size,
        )

    return ExtrinsicState(h_ext, v_ext, degenerate)


def combine(h_a, v_a, h_b, v_b):
    """ Precision-weighted product of two Gaussian messages """
    v = 1.0 / (1.0 / v_a + 1.0 / v_b)
    return v * (h_a / v_a + h_b / v_b), v


def nmse(h_hat, h):
    """ Normalized squared error and its value in dB

    >>> nmse(np.zeros(3), np.ones(3))
    (1.0, 0.0)
    """
    h_hat = np.asarray(getattr(h_hat, 'values', h_hat))
    h = np.asarray(getattr(h, 'values', h))
    if h_hat.shape != h.shape:
        raise ValueError(
            'shapes differ: {a} and {b}'.format(a=h_hat.shape, b=h.shape)
        )

    reference = np.sum(np.abs(h) ** 2)
    if reference == 0:
        raise ZeroNormTruth('reference channel is all-zero')

    ratio = float(np.sum(np.abs(h_hat - h) ** 2) / reference)
    if ratio == 0:
        return 0.0, float('-inf')
    return ratio, float(10 * np.log10(ratio))
