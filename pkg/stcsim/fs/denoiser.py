""" Module B for a support shared by all frequency-domain taps

All P columns of H_f have the same support, a single binary Markov chain
s_f over the N angles. Per-tap observations of the same angle add their
support log-odds; the chain is then swept once. The factor graph is a tree,
so the marginals are exact. """

import dataclasses
from dataclasses import dataclass

import numpy as np
from scipy.special import logit

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


def _logit(p):
    with np.errstate(divide='ignore'):
        return logit(p)


@dataclass(frozen=True, eq=False)
class FsParams:
    """ Hyperparameters of the frequency-support model

    Without an explicit `p10` the chain is tied to its activity,
    p10 = p01 lambda_f / (1 - lambda_f). `sigma2_f` is a scalar or one slab
    variance per tap. """

    lambda_f: float = 1 / 16
    p01: float = 1 / 16
    sigma2_f: np.ndarray = 1.0
    p10: float = None

    def __post_init__(self):
        if not 0 < self.lambda_f < 1:
            raise PriorError('lambda_f must be in (0, 1)')

        if not 0 < self.p01 < 1:
            raise PriorError('p01 must be in (0, 1)')

        p10 = self.p10
        if p10 is None:
            p10 = self.p01 * self.lambda_f / (1 - self.lambda_f)

        if not 0 < p10 < 1:
            raise PriorError(
                'p10 = {p10} is out of range for lambda_f={lam}, p01={p01}'
                .format(p10=p10, lam=self.lambda_f, p01=self.p01)
            )

        sigma2_f = np.asarray(self.sigma2_f, dtype=float)
        if not np.all(np.isfinite(sigma2_f) & (sigma2_f > 0)):
            raise PriorError('sigma2_f must be positive')

        object.__setattr__(self, 'p10', float(p10))
        object.__setattr__(self, 'sigma2_f', sigma2_f)

    def chain(self):
        return ChainParams(p10=self.p10, p01=self.p01, lambda0=self.lambda_f)

    def slab_variances(self, p_taps):
        return np.broadcast_to(self.sigma2_f, (p_taps,))

    def to_dict(self):
        return {
            'lambda_f': float(self.lambda_f),
            'p01': float(self.p01),
            'p10': self.p10,
            'sigma2_f': self.sigma2_f.tolist(),
        }


@dataclass(frozen=True, eq=False)
class FsPosterior:
    """ Support inference of one Module B call

    `extrinsic_logit` holds, per (n, p), the log-odds of s_n from the chain
    and all other taps, i.e. the message sent down to tap p. """

    chain: ChainPosterior
    evidence_logit: np.ndarray
    extrinsic_logit: np.ndarray

    @property
    def support(self):
        return self.chain.marginal


def denoise_fs(h_pri, v_pri, params):
    """ Posterior moments of H_f given H_B^pri = H_f + CN(0, v_pri) noise """
    h_pri, v_pri = check_input(h_pri, v_pri)
    sigma2 = params.slab_variances(h_pri.shape[1])

    evidence = support_logit(h_pri, v_pri, sigma2)
    chain = chain_forward_backward_logit(evidence.sum(axis=1), params.chain())

    prior = _logit(chain.forward) + _logit(chain.backward)
    extrinsic_logit = prior[:, np.newaxis] + leave_one_out(evidence, axis=1)

    activity = np.broadcast_to(chain.marginal[:, np.newaxis], h_pri.shape)
    mean, var = bg_scalar_posterior(h_pri, v_pri, activity, sigma2)

    posterior = FsPosterior(
        chain=chain, evidence_logit=evidence, extrinsic_logit=extrinsic_logit
    )
    return ModuleBOutput(
        mean=mean,
        variance=var.mean(axis=0),
        activity=activity,
        slab_second_moment=slab_second_moment(h_pri, v_pri, activity, sigma2),
        posterior=posterior,
        diagnostics={'support': chain.marginal},
    )


@dataclass(frozen=True)
class FrequencySupportDenoiser(Denoiser):
    params: FsParams = dataclasses.field(default_factory=FsParams)
    domain = Domain.ANGLE_FREQUENCY

    def denoise(self, h_pri, v_pri):
        return denoise_fs(h_pri, v_pri, self.params)

    def prior_power(self, p_taps):
        return self.params.lambda_f * self.params.slab_variances(p_taps)
