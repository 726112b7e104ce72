""" Module B plug-ins

A denoiser receives the extrinsic means (N x P) and per-tap variances from
Module A, treats them as observations of the channel in white Gaussian noise
and returns posterior moments. Structured denoisers live in their own
packages; this module holds the interface and the two basic cases. """

import abc
import dataclasses
from dataclasses import dataclass, field

import numpy as np

from stcsim.chanmodel import Domain
from stcsim.priors import BGPrior, denoise_bg_iid
from .exceptions import DenoiserInputError


def check_input(h_pri, v_pri):
    """ Validates Module B input and returns it as an N x P matrix and a
    P-vector of variances """
    h_pri = np.asarray(h_pri)
    if h_pri.ndim == 1:
        h_pri = h_pri[:, np.newaxis]

    v_pri = np.broadcast_to(np.asarray(v_pri, dtype=float), h_pri.shape[1:])
    if not np.all(np.isfinite(h_pri)):
        raise DenoiserInputError('non-finite prior means')

    if not np.all(np.isfinite(v_pri) & (v_pri > 0)):
        raise DenoiserInputError('prior variances must be positive')

    return h_pri, v_pri


@dataclass(frozen=True, eq=False)
class ModuleBOutput:
    """ Posterior moments and the statistics EM learning consumes """

    mean: np.ndarray
    variance: np.ndarray
    activity: np.ndarray
    slab_second_moment: np.ndarray
    posterior: object = None
    diagnostics: dict = field(default_factory=dict)


class Denoiser(abc.ABC):
    """ Base class of Module B implementations

    Subclasses are immutable and carry their prior parameters in `params`;
    EM learning swaps parameters with `with_params`. """

    # the domain of the matrices the denoiser operates on
    domain = Domain.ANGLE_FREQUENCY

    # denoisers that do not use a prior return their input unchanged, and
    # the turbo loop then skips the extrinsic division
    passthrough = False

    @abc.abstractmethod
    def denoise(self, h_pri, v_pri):
        """ Posterior moments for observations h_pri with variances v_pri """

    def prior_power(self, p_taps):
        """ Per-tap prior second moment, or None if unknown """
        return None

    def with_params(self, params):
        return dataclasses.replace(self, params=params)


@dataclass(frozen=True)
class IdentityDenoiser(Denoiser):
    domain: Domain = Domain.ANGLE_FREQUENCY
    passthrough = True

    def denoise(self, h_pri, v_pri):
        h_pri = np.asarray(h_pri)
        return ModuleBOutput(
            mean=h_pri,
            variance=np.broadcast_to(v_pri, h_pri.shape[1:]).astype(float),
            activity=np.ones(h_pri.shape),
            slab_second_moment=np.abs(h_pri) ** 2,
        )


@dataclass(frozen=True)
class IidDenoiser(Denoiser):
    """ Entrywise Bernoulli-Gaussian denoiser of the Turbo-CS baseline """

    params: BGPrior
    domain: Domain = Domain.ANGLE_FREQUENCY

    def denoise(self, h_pri, v_pri):
        h_pri, v_pri = check_input(h_pri, v_pri)
        posterior = denoise_bg_iid(h_pri, v_pri, self.params)
        return ModuleBOutput(
            mean=posterior.mean,
            variance=posterior.variance,
            activity=posterior.activity,
            slab_second_moment=posterior.slab_second_moment,
            posterior=posterior,
        )

    def prior_power(self, p_taps):
        return np.broadcast_to(self.params.power(), (p_taps,)).copy()
