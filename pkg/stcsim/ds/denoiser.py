""" Module B for delay-domain supports gated by tap activity

Every delay tap p has its own support chain s^(p) and a binary activity
state t^(p). An active tap (t = 1) follows the Markov kernel
(p10, p01, lambda_d); an inactive tap switches each entry on with the small
probability epsilon only. Taps are independent of each other.

Two inference modes are available. EXACT conditions on t: each condition
leaves a chain, so two sweeps per tap give exact marginals and the
likelihood ratio of t. PAPER_SCHEDULE runs one round of loopy message
passing on the joint graph: t sends its prior to every transition factor,
the chain is swept, the factors report back to t, and the chain is swept
once more with the leave-one-out messages of t. """

import enum
import logging
import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit

from stcsim.chanmodel import Domain
from stcsim.engine import Denoiser, ModuleBOutput, check_input
from stcsim.priors import (
    ChainParams,
    ChainPosterior,
    PriorError,
    support_logit,
    bg_scalar_posterior,
    slab_second_moment,
    chain_forward_backward_logit,
    leave_one_out,
)


logger = logging.getLogger(__name__)


DEFAULT_EPSILON = 1e-3

# max |difference| of support marginals tolerated between the two modes
SCHEDULE_AGREEMENT = 0.05


def _logit(p):
    with np.errstate(divide='ignore'):
        return logit(p)


class DsMode(enum.Enum):
    EXACT = 'EXACT'
    PAPER_SCHEDULE = 'PAPER_SCHEDULE'


@dataclass(frozen=True, eq=False)
class DsParams:
    """ Per-tap hyperparameters of the delay-support model

    Every field but `epsilon` is a scalar or a P-vector. Without `p10`
    each chain is tied to its activity. """

    lambda_d: np.ndarray = 1 / 16
    p01: np.ndarray = 1 / 16
    sigma2_d: np.ndarray = 1.0
    gamma: np.ndarray = 0.5
    p10: np.ndarray = None
    epsilon: float = DEFAULT_EPSILON

    def __post_init__(self):
        lambda_d = np.asarray(self.lambda_d, dtype=float)
        p01 = np.asarray(self.p01, dtype=float)
        if self.p10 is None:
            p10 = p01 * lambda_d / (1 - lambda_d)
        else:
            p10 = np.asarray(self.p10, dtype=float)

        probabilities = (('lambda_d', lambda_d), ('p01', p01), ('p10', p10))
        for name, value in probabilities:
            if not np.all((value > 0) & (value < 1)):
                raise PriorError('{name} must be in (0, 1)'.format(name=name))

        gamma = np.asarray(self.gamma, dtype=float)
        if not np.all((gamma >= 0) & (gamma <= 1)):
            raise PriorError('gamma must be in [0, 1]')

        sigma2_d = np.asarray(self.sigma2_d, dtype=float)
        if not np.all(np.isfinite(sigma2_d) & (sigma2_d > 0)):
            raise PriorError('sigma2_d must be positive')

        if not 0 < self.epsilon <= 0.1:
            raise PriorError('epsilon must be in (0, 0.1]')

        object.__setattr__(self, 'lambda_d', lambda_d)
        object.__setattr__(self, 'p01', p01)
        object.__setattr__(self, 'p10', p10)
        object.__setattr__(self, 'gamma', gamma)
        object.__setattr__(self, 'sigma2_d', sigma2_d)

    def per_tap(self, p_taps):
        """ All per-tap fields broadcast to P-vectors """
        shape = (p_taps,)
        return dataclasses.replace(
            self,
            lambda_d=np.broadcast_to(self.lambda_d, shape),
            p01=np.broadcast_to(self.p01, shape),
            p10=np.broadcast_to(self.p10, shape),
            gamma=np.broadcast_to(self.gamma, shape),
            sigma2_d=np.broadcast_to(self.sigma2_d, shape),
        )

    def active_chain(self):
        return ChainParams(p10=self.p10, p01=self.p01, lambda0=self.lambda_d)

    def inactive_chain(self):
        return ChainParams.memoryless(self.epsilon)

    def to_dict(self):
        return {
            'lambda_d': self.lambda_d.tolist(),
            'p01': self.p01.tolist(),
            'p10': self.p10.tolist(),
            'sigma2_d': self.sigma2_d.tolist(),
            'gamma': self.gamma.tolist(),
            'epsilon': self.epsilon,
        }


@dataclass(frozen=True, eq=False)
class DsPosterior:
    """ Support and tap activity inference of one Module B call

    `chain` is the chain posterior EM reads transition statistics from:
    the chain of an active tap in EXACT mode, the final sweep in
    PAPER_SCHEDULE mode. """

    mode: DsMode
    support: np.ndarray
    column_logit: np.ndarray
    chain: ChainPosterior
    evidence_logit: np.ndarray

    @property
    def column_activity(self):
        return expit(self.column_logit)


def _exact(evidence, params):
    active = chain_forward_backward_logit(evidence, params.active_chain())
    inactive = chain_forward_backward_logit(evidence, params.inactive_chain())

    with np.errstate(divide='ignore'):
        column_logit = (
            _logit(params.gamma)
            + active.log_partition
            - inactive.log_partition
        )

    weight = expit(column_logit)
    support = weight * active.marginal + (1 - weight) * inactive.marginal
    return support, column_logit, active


def _gated_chain(params, theta):
    """ Chain kernel of the transition factors given t-messages theta """
    eps = params.epsilon
    return ChainParams(
        p10=theta * params.p10 + (1 - theta) * eps,
        p01=theta * params.p01 + (1 - theta) * (1 - eps),
        lambda0=theta[0] * params.lambda_d + (1 - theta[0]) * eps,
    )


def _factor_to_activity(evidence, chain, params):
    """ Log-odds of the messages from every transition factor to t """
    eps = params.epsilon
    after = expit(_logit(chain.backward) + evidence)
    before = expit(_logit(chain.forward[:-1]) + evidence[:-1])

    lambda_d = params.lambda_d
    first_on = lambda_d * after[0] + (1 - lambda_d) * (1 - after[0])
    first_off = eps * after[0] + (1 - eps) * (1 - after[0])

    # inactive kernel rows are equal, so the previous state drops out
    rest_off = eps * after[1:] + (1 - eps) * (1 - after[1:])
    rest_on = (1 - before) * (
        params.p10 * after[1:] + (1 - params.p10) * (1 - after[1:])
    ) + before * (
        (1 - params.p01) * after[1:] + params.p01 * (1 - after[1:])
    )

    on = np.concatenate([first_on[np.newaxis], rest_on])
    off = np.concatenate([first_off[np.newaxis], rest_off])
    return np.log(on) - np.log(off)


def _loopy_schedule(evidence, params):
    gamma_logit = _logit(params.gamma)

    theta = np.broadcast_to(params.gamma, evidence.shape)
    first = chain_forward_backward_logit(
        evidence, _gated_chain(params, theta)
    )
    upward = _factor_to_activity(evidence, first, params)

    theta = expit(gamma_logit + leave_one_out(upward, axis=0))
    second = chain_forward_backward_logit(
        evidence, _gated_chain(params, theta)
    )

    upward = _factor_to_activity(evidence, second, params)
    column_logit = gamma_logit + upward.sum(axis=0)
    return second.marginal, column_logit, second


def denoise_ds(h_pri, v_pri, params, mode=DsMode.EXACT):
    """ Posterior moments of H_d given H_B^pri = H_d + CN(0, v_pri) noise """
    h_pri, v_pri = check_input(h_pri, v_pri)
    mode = DsMode(mode)
    params = params.per_tap(h_pri.shape[1])

    evidence = support_logit(h_pri, v_pri, params.sigma2_d)
    if mode == DsMode.EXACT:
        support, column_logit, chain = _exact(evidence, params)
    else:
        support, column_logit, chain = _loopy_schedule(evidence, params)

    mean, var = bg_scalar_posterior(h_pri, v_pri, support, params.sigma2_d)
    posterior = DsPosterior(
        mode=mode,
        support=support,
        column_logit=column_logit,
        chain=chain,
        evidence_logit=evidence,
    )
    return ModuleBOutput(
        mean=mean,
        variance=var.mean(axis=0),
        activity=support,
        slab_second_moment=slab_second_moment(
            h_pri, v_pri, support, params.sigma2_d
        ),
        posterior=posterior,
        diagnostics={
            'support': support,
            'column_activity': posterior.column_activity,
        },
    )


def ds_column_activity(posterior):
    """ P(t^(p) = 1 | observations) per tap """
    return posterior.column_activity


def compare_ds_schedules(h_pri, v_pri, params, threshold=SCHEDULE_AGREEMENT):
    """ Max absolute support-marginal difference between the two modes """
    exact = denoise_ds(h_pri, v_pri, params, DsMode.EXACT)
    loopy = denoise_ds(h_pri, v_pri, params, DsMode.PAPER_SCHEDULE)
    difference = float(
        np.max(np.abs(exact.posterior.support - loopy.posterior.support))
    )

    if difference > threshold:
        logger.warning(
            'support marginals of the two DS schedules differ by %.3g '
            '(threshold %.3g)',
            difference,
            threshold,
        )

    return difference


@dataclass(frozen=True)
class DelaySupportDenoiser(Denoiser):
    params: DsParams = dataclasses.field(default_factory=DsParams)
    mode: DsMode = DsMode.EXACT
    domain = Domain.ANGLE_DELAY

    def denoise(self, h_pri, v_pri):
        return denoise_ds(h_pri, v_pri, self.params, self.mode)

    def prior_power(self, p_taps):
        params = self.params.per_tap(p_taps)
        return params.gamma * params.lambda_d * params.sigma2_d
