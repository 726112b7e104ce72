""" The turbo iteration between Module A and Module B """

import json
import time
import logging
from dataclasses import dataclass, field

import numpy as np

from stcsim.chanmodel import ChannelMatrix, to_domain
from .denoisers import ModuleBOutput
from .exceptions import DivergenceError, DomainMismatch
from .modules import V_MIN, V_MAX, lmmse_update, extrinsic, nmse


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TurboConfig:
    max_iters: int = 50
    stop_tol: float = 1e-6
    damping: float = 1.0
    v_min: float = V_MIN
    v_max: float = V_MAX

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError('max_iters must be at least 1')

        if self.stop_tol < 0:
            raise ValueError('stop_tol must be nonnegative')

        if not 0 < self.damping <= 1:
            raise ValueError('damping must be in (0, 1]')

        if not 0 < self.v_min < self.v_max:
            raise ValueError('need 0 < v_min < v_max')


def format_db(value):
    """ A dB value for CSV and JSON output

    >>> format_db(float('-inf')), format_db(-12.5)
    ('-inf', '-12.5')
    """
    if np.isneginf(value):
        return '-inf'
    return repr(float(value))


@dataclass(eq=False)
class TrialResult:
    h_hat: ChannelMatrix
    nmse_trace_db: list
    iterations_used: int
    converged: bool
    wall_time: float
    seed: int = None
    learned_params: list = None
    column_activity: np.ndarray = None
    degenerate_events: int = 0
    diagnostics: dict = field(default_factory=dict)

    @property
    def final_nmse_db(self):
        if not self.nmse_trace_db:
            return None
        return self.nmse_trace_db[-1]

    def to_dict(self):
        activity = self.column_activity
        return {
            'seed': self.seed,
            'iterations_used': self.iterations_used,
            'converged': self.converged,
            'wall_time': self.wall_time,
            'nmse_trace_db': [format_db(x) for x in self.nmse_trace_db],
            'degenerate_events': self.degenerate_events,
            'learned_params': self.learned_params,
            'column_activity': (
                None if activity is None else np.asarray(activity).tolist()
            ),
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    def trace_csv(self):
        lines = ['iteration,nmse_db']
        lines.extend(
            '{i},{db}'.format(i=i, db=format_db(db))
            for i, db in enumerate(self.nmse_trace_db, start=1)
        )
        return '\n'.join(lines) + '\n'


def _module_a(ops, y, h_pri, v_pri, sigma2, config):
    if not isinstance(ops, (list, tuple)):
        return lmmse_update(
            ops, y, h_pri, v_pri, sigma2, config.v_min, config.v_max
        )

    h_post = np.empty_like(h_pri)
    v_post = np.empty(len(ops))
    for p, op in enumerate(ops):
        h_post[:, p], v_post[p] = lmmse_update(
            op, y[:, p], h_pri[:, p], v_pri[p], sigma2,
            config.v_min, config.v_max,
        )
    return h_post, v_post


def initial_variance(denoiser, p_taps, learner=None, config=None):
    """ Per-tap variance of the first Module A prior

    The prior power of a denoiser with known parameters, one when the
    parameters are unknown or still being learned. """
    config = config or TurboConfig()
    power = None if learner is not None else denoiser.prior_power(p_taps)
    v_pri = np.ones(p_taps) if power is None else np.asarray(power, float)
    return np.clip(v_pri, config.v_min, config.v_max)


def _check_finite(iteration, stage, *arrays):
    if not all(np.all(np.isfinite(a)) for a in arrays):
        raise DivergenceError(iteration, stage)


def run_turbo(ops, y, denoiser, config=None, truth=None, learner=None,
              seed=None):
    """ Alternate Module A and Module B until the estimate settles

    `ops` is one operator shared by all taps or one operator per tap. The
    returned estimate is the Module B posterior mean in the domain of `y`.
    With `truth` the NMSE is recorded after every iteration. A `learner`
    updates the denoiser's parameters after every Module B step. Damping
    mixes the mean and the variance of the next Module A prior with the
    current ones. """
    config = config or TurboConfig()
    started = time.perf_counter()

    if denoiser.domain != y.domain:
        raise DomainMismatch(
            'denoiser works in {d}, observations are in {y}'.format(
                d=denoiser.domain.value, y=y.domain.value
            )
        )

    values = np.asarray(y.values)
    first = ops[0] if isinstance(ops, (list, tuple)) else ops
    p_taps = values.shape[1]

    reference = None
    if truth is not None:
        reference = to_domain(truth, y.domain).values

    h_a_pri = np.zeros((first.n, p_taps), dtype=np.complex128)
    v_a_pri = initial_variance(denoiser, p_taps, learner, config)

    trace = []
    degenerate = 0
    converged = False
    estimate = None
    output = ModuleBOutput(None, None, None, None)

    iteration = 0
    for iteration in range(1, config.max_iters + 1):
        h_a_post, v_a_post = _module_a(
            ops, values, h_a_pri, v_a_pri, y.sigma2, config
        )
        _check_finite(iteration, 'module A', h_a_post, v_a_post)

        h_b_pri, v_b_pri, flags = extrinsic(
            h_a_post, v_a_post, h_a_pri, v_a_pri, config.v_min, config.v_max
        )
        degenerate += int(np.count_nonzero(flags))

        output = denoiser.denoise(h_b_pri, v_b_pri)
        _check_finite(iteration, 'module B', output.mean, output.variance)

        if learner is not None:
            denoiser = learner.update(denoiser, output)

        if denoiser.passthrough:
            h_next, v_next = h_b_pri, v_b_pri
        else:
            h_next, v_next, flags = extrinsic(
                output.mean,
                np.clip(output.variance, config.v_min, config.v_max),
                h_b_pri,
                v_b_pri,
                config.v_min,
                config.v_max,
            )
            degenerate += int(np.count_nonzero(flags))

        v_next = np.broadcast_to(v_next, (p_taps,)).astype(float)
        h_a_pri = config.damping * h_next + (1 - config.damping) * h_a_pri
        v_a_pri = config.damping * v_next + (1 - config.damping) * v_a_pri

        previous, estimate = estimate, output.mean
        if reference is not None:
            trace.append(nmse(estimate, reference)[1])

        if previous is not None:
            change = np.linalg.norm(estimate - previous)
            if change <= config.stop_tol * np.linalg.norm(previous):
                converged = True
                break

    wall_time = time.perf_counter() - started
    logger.debug(
        'turbo run finished after %d iterations (converged=%s) in %.3fs',
        iteration,
        converged,
        wall_time,
    )

    return TrialResult(
        h_hat=ChannelMatrix(estimate, y.domain),
        nmse_trace_db=trace,
        iterations_used=iteration,
        converged=converged,
        wall_time=wall_time,
        seed=seed,
        learned_params=None if learner is None else learner.trajectory,
        column_activity=output.diagnostics.get('column_activity'),
        degenerate_events=degenerate,
        diagnostics=output.diagnostics,
    )
