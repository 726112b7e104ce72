""" Forward-backward inference on binary Markov chain supports

Positions run along axis 0; any further axes hold independent chains that
are swept together. Local evidence enters as log-odds, e_n = expit(E_n).

The forward message at n is the predicted activity
lambda_n^f = P(s_n = 1 | e_1..e_{n-1}); the backward message lambda_n^b is
the normalized message from positions n+1..N, with lambda_N^b = 1/2. """

import logging
from dataclasses import dataclass

import numpy as np
from scipy.special import expit, logit, log_expit

from stcsim.chanmodel import stationary_activity


logger = logging.getLogger(__name__)


EVIDENCE_CLIP = 1e-12

# |own logit| beyond which total - own is recomputed without cancellation
DOMINANCE_THRESHOLD = 1e6


class ChainError(ValueError):
    """ Chain parameters are out of range """


def _logit(p):
    with np.errstate(divide='ignore'):
        return logit(p)


@dataclass(frozen=True, eq=False)
class ChainParams:
    """ Transition probabilities p10 (0 to 1) and p01 (1 to 0)

    Each field may be a scalar, one value per chain, or an array of the
    evidence's shape for position-dependent kernels, in which case entry n
    is the transition into position n. `lambda0` defaults to the stationary
    activity. """

    p10: np.ndarray
    p01: np.ndarray
    lambda0: np.ndarray = None

    def __post_init__(self):
        p10 = np.asarray(self.p10, dtype=float)
        p01 = np.asarray(self.p01, dtype=float)
        for name, value in (('p10', p10), ('p01', p01)):
            if not np.all((value > 0) & (value < 1)):
                raise ChainError('{name} must be in (0, 1)'.format(name=name))

        if self.lambda0 is None:
            lambda0 = stationary_activity(p10, p01)
        else:
            lambda0 = np.asarray(self.lambda0, dtype=float)

        if not np.all((lambda0 >= 0) & (lambda0 <= 1)):
            raise ChainError('lambda0 must be in [0, 1]')

        object.__setattr__(self, 'p10', p10)
        object.__setattr__(self, 'p01', p01)
        object.__setattr__(self, 'lambda0', lambda0)

    @classmethod
    def tied(cls, activity, p01):
        """ Chain whose stationary activity is `activity`

        >>> params = ChainParams.tied(0.2, 0.4)
        >>> round(float(params.p10), 12)
        0.1
        """
        activity = np.asarray(activity, dtype=float)
        p10 = p01 * activity / (1 - activity)
        return cls(p10=p10, p01=p01, lambda0=activity)

    @classmethod
    def memoryless(cls, activity):
        """ i.i.d. Bernoulli(activity) positions """
        activity = np.asarray(activity, dtype=float)
        return cls(p10=activity, p01=1 - activity, lambda0=activity)

    def transitions(self, shape):
        """ Per-position kernels [[1 - p10, p10], [p01, 1 - p01]] """
        p10 = np.broadcast_to(self.p10, shape)
        p01 = np.broadcast_to(self.p01, shape)
        return np.stack(
            [
                np.stack([1 - p10, p10], axis=-1),
                np.stack([p01, 1 - p01], axis=-1),
            ],
            axis=-2,
        )


@dataclass(frozen=True, eq=False)
class ChainPosterior:
    forward: np.ndarray
    backward: np.ndarray
    marginal_logit: np.ndarray
    pairwise: np.ndarray
    log_partition: np.ndarray

    @property
    def marginal(self):
        """ P(s_n = 1 | all evidence) """
        return expit(self.marginal_logit)

    def transition_counts(self):
        """ Expected 1->0 transitions, ones followed by any state, 0->1
        transitions and zeros followed by any state, summed along the chain """
        pairwise = self.pairwise
        return (
            pairwise[..., 1, 0].sum(axis=0),
            pairwise[..., 1, :].sum(axis=(0, -1)),
            pairwise[..., 0, 1].sum(axis=0),
            pairwise[..., 0, :].sum(axis=(0, -1)),
        )


def _sweep(evidence, params):
    shape = evidence.shape
    p10 = np.broadcast_to(params.p10, shape)
    p01 = np.broadcast_to(params.p01, shape)

    forward = np.empty(shape)
    backward = np.empty(shape)
    forward[0] = np.broadcast_to(params.lambda0, shape[1:])
    backward[-1] = 0.5

    for n in range(1, shape[0]):
        q = expit(_logit(forward[n - 1]) + evidence[n - 1])
        forward[n] = (1 - p01[n]) * q + p10[n] * (1 - q)

    for n in range(shape[0] - 2, -1, -1):
        q = expit(_logit(backward[n + 1]) + evidence[n + 1])
        on = (1 - p01[n + 1]) * q + p01[n + 1] * (1 - q)
        off = p10[n + 1] * q + (1 - p10[n + 1]) * (1 - q)
        backward[n] = on / (on + off)

    return forward, backward


def _pairwise(evidence, forward, backward, params):
    """ P(s_{n-1} = a, s_n = b | all evidence) for n = 1..N-1 """
    before = expit(_logit(forward[:-1]) + evidence[:-1])
    after = expit(_logit(backward[1:]) + evidence[1:])

    left = np.stack([1 - before, before], axis=-1)
    right = np.stack([1 - after, after], axis=-1)
    kernel = params.transitions(evidence.shape)[1:]

    joint = left[..., :, np.newaxis] * kernel * right[..., np.newaxis, :]
    return joint / joint.sum(axis=(-2, -1), keepdims=True)


def _log_partition(evidence, forward):
    """ log sum_s P(s) prod_n e_n(s_n) with normalized local evidence """
    with np.errstate(divide='ignore'):
        on = np.log(forward) + log_expit(evidence)
        off = np.log1p(-forward) + log_expit(-evidence)
    return np.logaddexp(on, off).sum(axis=0)


def chain_forward_backward_logit(evidence_logit, params):
    """ Exact chain posterior from finite per-position log-odds evidence """
    evidence = np.asarray(evidence_logit, dtype=float)
    if evidence.ndim == 0 or evidence.shape[0] == 0:
        raise ChainError('need at least one position')

    if not np.all(np.isfinite(evidence)):
        raise ChainError('evidence log-odds must be finite')

    forward, backward = _sweep(evidence, params)
    marginal_logit = _logit(forward) + _logit(backward) + evidence

    return ChainPosterior(
        forward=forward,
        backward=backward,
        marginal_logit=marginal_logit,
        pairwise=_pairwise(evidence, forward, backward, params),
        log_partition=_log_partition(evidence, forward),
    )


def chain_forward_backward(evidence, params):
    """ Exact chain posterior from per-position evidence probabilities

    Evidence is clipped to [1e-12, 1 - 1e-12].

    >>> post = chain_forward_backward([0.5, 0.5, 0.5], ChainParams(0.1, 0.3))
    >>> [round(float(x), 12) for x in post.marginal]
    [0.25, 0.25, 0.25]
    """
    evidence = np.clip(
        np.asarray(evidence, dtype=float), EVIDENCE_CLIP, 1 - EVIDENCE_CLIP
    )
    return chain_forward_backward_logit(logit(evidence), params)


def leave_one_out(logits, axis=-1):
    """ For every entry, the sum of the other entries along `axis`

    Computed as total minus own; entries whose own term dominates are
    recomputed from prefix and suffix sums.

    >>> leave_one_out(np.array([1.0, 2.0, 4.0])).tolist()
    [6.0, 5.0, 3.0]
    """
    logits = np.moveaxis(np.asarray(logits, dtype=float), axis, -1)
    total = logits.sum(axis=-1, keepdims=True)
    result = total - logits

    dominant = np.abs(logits) > DOMINANCE_THRESHOLD
    if np.any(dominant):
        zeros = np.zeros(logits.shape[:-1] + (1,))
        prefix = np.concatenate(
            [zeros, np.cumsum(logits, axis=-1)[..., :-1]], axis=-1
        )
        suffix = np.concatenate(
            [np.cumsum(logits[..., ::-1], axis=-1)[..., ::-1][..., 1:], zeros],
            axis=-1,
        )
        result = np.where(dominant, prefix + suffix, result)

    return np.moveaxis(result, -1, axis)
