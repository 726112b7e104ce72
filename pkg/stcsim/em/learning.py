""" EM learning of the prior hyperparameters

After every Module B call the learner replaces the denoiser's parameters by
the maximizers of the expected complete-data log-likelihood, computed from
the posterior support marginals, the pairwise chain statistics and the
activity-weighted slab moments. Probabilities are projected into
[1e-6, 1 - 1e-6] and slab variances floored at 1e-12; a tap whose
posterior support mass vanishes keeps its previous parameters.

Both transition probabilities come from their own pairwise counts. The
expected numbers of 0->1 and 1->0 transitions differ by at most one, so
the learned chain stays tied to its activity, lambda = (1 + p01/p10)^-1,
up to that boundary term while lambda itself only sets the first state. """

import abc
import enum
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit, logit

from stcsim.fs import FsParams
from stcsim.ds import DsParams
from stcsim.priors import BGPrior


logger = logging.getLogger(__name__)


PROB_MIN = 1e-6
PROB_MAX = 1 - 1e-6
SIGMA2_FLOOR = 1e-12

# support mass below which a tap's statistics are not trusted
SUPPORT_GUARD = 1e-9

INIT_ACTIVITY = 0.3
INIT_P01 = 0.1
INIT_GAMMA = 0.1

# max. change of a tap activity's log-odds per update
GAMMA_STEP = 4.0


class LambdaUpdate(enum.Enum):
    """ How the chain activity is re-estimated

    FIRST takes the marginal of the first state, MEAN averages the support
    marginals along the chain. """

    FIRST = 'FIRST'
    MEAN = 'MEAN'


def _project(p):
    return np.clip(p, PROB_MIN, PROB_MAX)


def _ratio(count, total, previous):
    with np.errstate(divide='ignore', invalid='ignore'):
        value = np.where(total > SUPPORT_GUARD, count / total, previous)
    return _project(value)


def _first_operator(ops):
    return ops[0] if isinstance(ops, (list, tuple)) else ops


def em_init_sigma2(y, op):
    """ Slab variance per tap from the observation energy, 2N||y||^2/M^2

    >>> from stcsim.linops import make_sensing_operator
    >>> op = make_sensing_operator(256, 103, 'DFT_RP', 0)
    >>> round(float(em_init_sigma2(np.ones(103), op)[0]), 3)
    4.971
    """
    op = _first_operator(op)
    values = np.asarray(getattr(y, 'values', y))
    if values.ndim == 1:
        values = values[:, np.newaxis]

    energy = np.sum(np.abs(values) ** 2, axis=0)
    return np.maximum(2 * op.n * energy / op.m ** 2, SIGMA2_FLOOR)


def em_init_fs(y, op):
    return FsParams(
        lambda_f=INIT_ACTIVITY, p01=INIT_P01, sigma2_f=em_init_sigma2(y, op)
    )


def em_init_ds(y_d, op):
    sigma2 = em_init_sigma2(y_d, op)
    shape = sigma2.shape
    return DsParams(
        lambda_d=np.full(shape, INIT_ACTIVITY),
        p01=np.full(shape, INIT_P01),
        sigma2_d=sigma2,
        gamma=np.full(shape, INIT_GAMMA),
    )


def em_init_iid(y, op):
    sigma2 = em_init_sigma2(y, op)
    return BGPrior(pi=np.full(sigma2.shape, INIT_ACTIVITY), sigma2_h=sigma2)


def _chain_update(chain, previous, lambda_update):
    """ Activity, 1->0 and 0->1 transition probabilities from a chain
    posterior; `previous` holds the current (lambda, p01, p10) """
    previous_lambda, previous_p01, previous_p10 = previous
    marginal = chain.marginal
    if LambdaUpdate(lambda_update) == LambdaUpdate.FIRST:
        activity = marginal[0]
    else:
        activity = marginal.mean(axis=0)

    ones_to_zero, ones, zeros_to_one, zeros = chain.transition_counts()
    p01 = _ratio(ones_to_zero, ones, previous_p01)
    p10 = _ratio(zeros_to_one, zeros, previous_p10)

    valid = marginal.sum(axis=0) > SUPPORT_GUARD
    return (
        np.where(valid, _project(activity), previous_lambda),
        np.where(valid, p01, previous_p01),
        np.where(valid, p10, previous_p10),
    )


def _gamma_update(previous, target):
    """ Moves the tap activity towards `target` by at most GAMMA_STEP in
    log-odds """
    start = logit(_project(previous))
    step = np.clip(logit(_project(target)) - start, -GAMMA_STEP, GAMMA_STEP)
    return _project(expit(start + step))


def _slab_update(output, previous, axis=0):
    """ sum E[|h|^2 s] / sum P(s = 1), the previous value where the support
    mass vanishes """
    mass = np.sum(output.activity, axis=axis)
    energy = np.sum(output.slab_second_moment, axis=axis)
    with np.errstate(divide='ignore', invalid='ignore'):
        sigma2 = np.where(mass > SUPPORT_GUARD, energy / mass, previous)
    return np.maximum(sigma2, SIGMA2_FLOOR)


def em_update_fs(params, output, lambda_update=LambdaUpdate.FIRST,
                 tied_sigma=False):
    """ New FsParams from one STCS-FS Module B output """
    chain = output.posterior.chain
    if not chain.marginal.sum() > SUPPORT_GUARD:
        logger.debug('empty posterior support, keeping FS parameters')
        return params

    lambda_f, p01, p10 = _chain_update(
        chain, (params.lambda_f, params.p01, params.p10), lambda_update
    )

    p_taps = output.activity.shape[1]
    previous = params.slab_variances(p_taps)
    if tied_sigma:
        sigma2 = _slab_update(output, previous.mean(), axis=None)
        sigma2 = np.full(p_taps, float(sigma2))
    else:
        sigma2 = _slab_update(output, previous)

    return FsParams(
        lambda_f=float(lambda_f),
        p01=float(p01),
        p10=float(p10),
        sigma2_f=sigma2,
    )


def em_update_ds(params, output, lambda_update=LambdaUpdate.FIRST):
    """ New per-tap DsParams from one STCS-DS Module B output """
    posterior = output.posterior
    p_taps = output.activity.shape[1]
    params = params.per_tap(p_taps)

    lambda_d, p01, p10 = _chain_update(
        posterior.chain,
        (params.lambda_d, params.p01, params.p10),
        lambda_update,
    )
    sigma2 = _slab_update(output, params.sigma2_d)

    valid = output.activity.sum(axis=0) > SUPPORT_GUARD
    gamma = np.where(
        valid,
        _gamma_update(params.gamma, posterior.column_activity),
        params.gamma,
    )
    if not np.all(valid):
        logger.debug(
            'empty posterior support on %d taps, keeping their parameters',
            np.count_nonzero(~valid),
        )

    return DsParams(
        lambda_d=lambda_d,
        p01=p01,
        p10=p10,
        sigma2_d=sigma2,
        gamma=gamma,
        epsilon=params.epsilon,
    )


def em_update_iid(prior, output):
    """ New per-tap BGPrior from one Turbo-CS Module B output """
    p_taps = output.activity.shape[1]
    pi_prev = np.broadcast_to(prior.pi, (p_taps,))
    sigma2_prev = np.broadcast_to(prior.sigma2_h, (p_taps,))

    valid = output.activity.sum(axis=0) > SUPPORT_GUARD
    pi = np.where(valid, _project(output.activity.mean(axis=0)), pi_prev)
    return BGPrior(pi=pi, sigma2_h=_slab_update(output, sigma2_prev))


def params_to_dict(params):
    if isinstance(params, BGPrior):
        return {'pi': params.pi.tolist(), 'sigma2_h': params.sigma2_h.tolist()}
    return params.to_dict()


@dataclass
class EmState:
    params: object
    iteration: int = 0
    trajectory: list = field(default_factory=list)


class Learner(abc.ABC):
    """ Interleaves one EM step with every turbo iteration """

    def __init__(self, params, lambda_update=LambdaUpdate.FIRST):
        self.lambda_update = LambdaUpdate(lambda_update)
        self.state = EmState(params=params)

    @abc.abstractmethod
    def step(self, params, output):
        """ The updated parameters """

    def update(self, denoiser, output):
        params = self.step(denoiser.params, output)
        self.state.params = params
        self.state.iteration += 1
        self.state.trajectory.append(params_to_dict(params))
        return denoiser.with_params(params)

    @property
    def trajectory(self):
        return self.state.trajectory


class FsLearner(Learner):
    def __init__(self, params, lambda_update=LambdaUpdate.FIRST,
                 tied_sigma=False):
        super().__init__(params, lambda_update)
        self.tied_sigma = tied_sigma

    def step(self, params, output):
        return em_update_fs(
            params, output, self.lambda_update, self.tied_sigma
        )


class DsLearner(Learner):
    def step(self, params, output):
        return em_update_ds(params, output, self.lambda_update)


class IidLearner(Learner):
    def step(self, params, output):
        return em_update_iid(params, output)
