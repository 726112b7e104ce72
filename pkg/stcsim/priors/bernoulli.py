""" Bernoulli-Gaussian (spike-and-slab) scalar inference

A coefficient h is zero with probability 1 - pi and CN(0, sigma2_h)
otherwise. It is observed as m = h + CN(0, v). Support evidence is carried
as a log-odds ratio so that products over many observations become sums. """

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit


logger = logging.getLogger(__name__)


class PriorError(ValueError):
    """ Prior parameters are out of range """


@dataclass(frozen=True, eq=False)
class BGPrior:
    """ Activity probability and slab variance, scalars or one per tap """

    pi: np.ndarray
    sigma2_h: np.ndarray

    def __post_init__(self):
        pi = np.asarray(self.pi, dtype=float)
        sigma2_h = np.asarray(self.sigma2_h, dtype=float)

        if np.any((pi < 0) | (pi > 1)):
            raise PriorError('pi must be in [0, 1]')

        if np.any(sigma2_h < 0) or not np.all(np.isfinite(sigma2_h)):
            raise PriorError('sigma2_h must be finite and nonnegative')

        object.__setattr__(self, 'pi', pi)
        object.__setattr__(self, 'sigma2_h', sigma2_h)

    def power(self):
        """ The prior second moment pi * sigma2_h """
        return self.pi * self.sigma2_h


def _logit(p):
    with np.errstate(divide='ignore'):
        return logit(p)


def support_logit(m, v, sigma2_h):
    """ log CN(0; m, v + sigma2_h) - log CN(0; m, v)

    The log-likelihood ratio of "active" against "zero" for an observation
    m with noise variance v.

    >>> float(support_logit(3.0, 1.0, 0.0))
    0.0
    """
    m2 = np.abs(m) ** 2
    v = np.asarray(v, dtype=float)
    total = v + sigma2_h
    return np.log(v / total) + m2 * sigma2_h / (v * total)


def support_evidence(m, v, sigma2_h):
    """ pi_up = (1 + CN(0; m, v) / CN(0; m, v + sigma2_h))^-1

    >>> round(float(support_evidence(0.0, 1.0, 2.0)), 12)
    0.25
    """
    return expit(support_logit(m, v, sigma2_h))


def bg_scalar_posterior(m, v, pi_post, sigma2_h):
    """ Posterior mean and variance of h given m and P(active | m)

    With g = sigma2_h / (sigma2_h + v) the active branch is CN(g m, g v).

    >>> mean, var = bg_scalar_posterior(2.0, 1.0, 1.0, 1.0)
    >>> float(mean), float(var)
    (1.0, 0.5)
    """
    g = sigma2_h / (sigma2_h + np.asarray(v, dtype=float))
    mean = pi_post * g * m
    second = slab_second_moment(m, v, pi_post, sigma2_h)
    var = np.maximum(second - np.abs(mean) ** 2, 0.0)
    return mean, var


def slab_second_moment(m, v, pi_post, sigma2_h):
    """ E[|h|^2 s | m], the activity-weighted second moment of the slab """
    g = sigma2_h / (sigma2_h + np.asarray(v, dtype=float))
    return pi_post * (g * v + np.abs(g * m) ** 2)


@dataclass(frozen=True, eq=False)
class IidPosterior:
    mean: np.ndarray
    variance: np.ndarray
    activity: np.ndarray
    slab_second_moment: np.ndarray


def denoise_bg_iid(h_pri, v_pri, prior):
    """ Entrywise spike-and-slab MMSE denoising of an N x P matrix

    `v_pri` and the prior parameters are scalars or one per column. The
    returned variance is the per-column average posterior variance. """
    h_pri = np.asarray(h_pri)
    if h_pri.ndim == 1:
        h_pri = h_pri[:, np.newaxis]

    v = np.broadcast_to(np.asarray(v_pri, dtype=float), h_pri.shape[1:])
    pi = np.broadcast_to(prior.pi, h_pri.shape[1:])
    sigma2_h = np.broadcast_to(prior.sigma2_h, h_pri.shape[1:])

    activity = expit(_logit(pi) + support_logit(h_pri, v, sigma2_h))
    mean, var = bg_scalar_posterior(h_pri, v, activity, sigma2_h)

    return IidPosterior(
        mean=mean,
        variance=var.mean(axis=0),
        activity=activity,
        slab_second_moment=slab_second_moment(h_pri, v, activity, sigma2_h),
    )
