""" Scalar state evolution of the turbo iteration

tau_A is the variance of the Module A prior (the MSE of Module B's extrinsic
output), tau_B the variance of the Module B prior. Module A maps tau_A to
tau_B in closed form; the Module B map is estimated by Monte Carlo over
channels drawn from the generator. The fixed point of the composition
predicts the MSE the turbo iteration settles at.

Every Monte Carlo evaluation of one fixed-point search uses the same random
channels and noise, so the estimated Module B map is a deterministic
function of tau_B and the recursion can converge to a relative tolerance
well below the Monte Carlo error. """

import io
import csv
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from stcsim.chanmodel import generate_channel, to_domain
from stcsim.engine import V_MIN, V_MAX, extrinsic


logger = logging.getLogger(__name__)


SE_TRIALS = 200
SE_TOL = 1e-6
SE_MAX_ITER = 100

# consecutive increases of tau_A that mark the recursion as oscillating
OSCILLATION_RUN = 3


# Exceptions


class StateEvolutionError(ValueError):
    """ Base class for state evolution errors """


class InsufficientTrials(StateEvolutionError):
    """ A Monte Carlo estimate was requested with fewer than one trial """


class ModuleAStep(NamedTuple):
    tau_b: float
    clamped: bool


class McEstimate(NamedTuple):
    """ Monte Carlo estimate of the Module B map

    `tau_a` is the MSE of the extrinsic output, `posterior_mse` the MSE of
    the posterior mean; both come with their standard errors. """

    tau_a: float
    stderr: float
    posterior_mse: float
    posterior_stderr: float


class SeStep(NamedTuple):
    iteration: int
    tau_a: float
    tau_b: float
    mc_stderr: float
    posterior_mse: float


@dataclass
class SeState:
    tau_a: float
    tau_b: float
    signal_power: float
    trajectory: list = field(default_factory=list)
    converged: bool = False
    oscillating: bool = False
    clamped: bool = False

    @property
    def predicted_nmse(self):
        """ Extrinsic MSE at the fixed point relative to the signal power """
        return self.tau_a / self.signal_power

    @property
    def predicted_posterior_nmse(self):
        """ MSE of the final posterior mean relative to the signal power """
        if not self.trajectory:
            return None
        return self.trajectory[-1].posterior_mse / self.signal_power

    def predicted_trace_db(self):
        """ Posterior NMSE per iteration, comparable with a simulated trace """
        return [
            float(10 * np.log10(step.posterior_mse / self.signal_power))
            if step.posterior_mse > 0 else float('-inf')
            for step in self.trajectory
        ]

    def to_csv(self):
        out = io.StringIO()
        writer = csv.writer(out, lineterminator='\n')
        writer.writerow(['iter', 'tau_A', 'tau_B', 'mc_stderr'])
        for step in self.trajectory:
            writer.writerow(
                [step.iteration, repr(step.tau_a), repr(step.tau_b),
                 repr(step.mc_stderr)]
            )
        return out.getvalue()


def se_module_a(tau_a, sigma2, m, n, v_min=V_MIN):
    """ tau_B = N/M (tau_A + sigma2) - tau_A

    A nonpositive result means Module A is (nearly) exact; it is clamped to
    v_min and flagged.

    >>> round(se_module_a(0.01, 1e-3, 103, 256).tau_b, 5)
    0.01734
    >>> se_module_a(0.0, 0.0, 8, 8)
    ModuleAStep(tau_b=1e-13, clamped=True)
    """
    if tau_a < 0 or sigma2 < 0:
        raise StateEvolutionError('variances must be nonnegative')

    if not 0 < m <= n:
        raise StateEvolutionError(
            'need 0 < m <= n, got m={m}, n={n}'.format(m=m, n=n)
        )

    tau_b = n / m * (tau_a + sigma2) - tau_a
    if tau_b <= v_min:
        return ModuleAStep(v_min, True)
    return ModuleAStep(float(tau_b), False)


def _trial_errors(tau_b, denoiser, channel_spec, seed):
    """ Extrinsic and posterior squared errors of one Monte Carlo trial """
    rng = np.random.default_rng(seed)
    h = to_domain(generate_channel(channel_spec, rng), denoiser.domain).values
    noise = np.sqrt(tau_b / 2) * (
        rng.standard_normal(h.shape) + 1j * rng.standard_normal(h.shape)
    )
    h_pri = h + noise
    output = denoiser.denoise(h_pri, tau_b)

    state = extrinsic(output.mean, output.variance, h_pri, tau_b, V_MIN, V_MAX)
    return (
        float(np.mean(np.abs(state.mean - h) ** 2)),
        float(np.mean(np.abs(output.mean - h) ** 2)),
    )


def _trial_chunk(tau_b, denoiser, channel_spec, seeds):
    return [_trial_errors(tau_b, denoiser, channel_spec, s) for s in seeds]


def _mean_and_stderr(samples):
    samples = np.asarray(samples)
    if samples.size < 2:
        return float(samples.mean()), 0.0
    return (
        float(samples.mean()),
        float(samples.std(ddof=1) / np.sqrt(samples.size)),
    )


def se_module_b_mc(tau_b, denoiser, channel_spec, trials=SE_TRIALS, rng=None,
                   workers=1):
    """ tau_A = E ||D_B(H + sqrt(tau_B) E) - H||_F^2 / (N P)

    D_B is the denoiser followed by the extrinsic step and E has i.i.d.
    CN(0, 1) entries. A denoiser without a prior returns its input, so its
    posterior equals its prior and the map is the identity. """
    if trials < 1:
        raise InsufficientTrials(
            'need at least one trial, got {trials}'.format(trials=trials)
        )

    if not tau_b > 0:
        raise StateEvolutionError('tau_B must be positive')

    if denoiser.passthrough:
        return McEstimate(float(tau_b), 0.0, float(tau_b), 0.0)

    seeds = np.random.default_rng(rng).integers(2 ** 63, size=trials)
    if workers > 1:
        chunks = np.array_split(seeds, workers)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                _trial_chunk,
                *zip(*[(tau_b, denoiser, channel_spec, c) for c in chunks])
            )
            errors = [e for part in parts for e in part]
    else:
        errors = _trial_chunk(tau_b, denoiser, channel_spec, seeds)

    extrinsic_errors, posterior_errors = zip(*errors)
    tau_a, stderr = _mean_and_stderr(extrinsic_errors)
    posterior_mse, posterior_stderr = _mean_and_stderr(posterior_errors)
    return McEstimate(tau_a, stderr, posterior_mse, posterior_stderr)


def se_fixed_point(sigma2, m, n, denoiser, channel_spec, tol=SE_TOL,
                   max_iter=SE_MAX_ITER, trials=SE_TRIALS, rng=None,
                   workers=1):
    """ Iterate tau_A <- g(f(tau_A)) from the prior signal power """
    power = channel_spec.mean_entry_power()
    if not power > 0:
        raise StateEvolutionError('the channel spec has zero signal power')

    seed = int(np.random.default_rng(rng).integers(2 ** 63))
    state = SeState(tau_a=power, tau_b=None, signal_power=power)

    increases = 0
    for iteration in range(1, max_iter + 1):
        step_a = se_module_a(state.tau_a, sigma2, m, n)
        state.clamped |= step_a.clamped

        estimate = se_module_b_mc(
            step_a.tau_b, denoiser, channel_spec, trials, seed, workers
        )
        state.trajectory.append(
            SeStep(
                iteration,
                estimate.tau_a,
                step_a.tau_b,
                estimate.stderr,
                estimate.posterior_mse,
            )
        )

        previous = state.tau_a
        state.tau_a, state.tau_b = estimate.tau_a, step_a.tau_b

        if abs(state.tau_a - previous) <= tol * previous:
            state.converged = True
            break

        if state.tau_a > previous + 3 * estimate.stderr:
            increases += 1
        else:
            increases = 0

        if increases > OSCILLATION_RUN:
            state.oscillating = True
            logger.warning(
                'state evolution oscillates: tau_A grew in %d consecutive '
                'iterations',
                increases,
            )
            break

    if state.clamped:
        logger.warning(
            'tau_B was clamped to %g: Module A is nearly exact', V_MIN
        )

    if not state.converged and not state.oscillating:
        logger.warning(
            'state evolution did not converge in %d iterations', max_iter
        )

    return state
