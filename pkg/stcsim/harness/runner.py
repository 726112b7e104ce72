""" Trial orchestration: seeded trials, summaries, sweeps, SE overlays and
timing benchmarks """

import io
import csv
import time
import logging
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from stcsim.linops import make_sensing_operator
from stcsim.chanmodel import (
    Domain,
    generate_channel,
    noise_variance,
    observe,
    to_domain,
)
from stcsim.chanmodel import formats
from stcsim.engine import IidDenoiser, format_db, run_turbo
from stcsim.fs import FsParams, FrequencySupportDenoiser
from stcsim.ds import DsParams, DelaySupportDenoiser
from stcsim.priors import BGPrior
from stcsim.em import (
    PROB_MIN,
    PROB_MAX,
    FsLearner,
    DsLearner,
    IidLearner,
    em_init_fs,
    em_init_ds,
    em_init_iid,
)
from stcsim.state_evolution import se_fixed_point
from .config import Algorithm, ChannelSource, InvalidValue


logger = logging.getLogger(__name__)


# max. per-iteration time ratio when doubling N
SCALING_LIMIT = 2.6


@dataclass
class TrialOutcome:
    """ The result of one trial, or why it failed """

    trial_index: int
    seed: int
    m: int
    snr_db: float
    result: object = None
    error: str = None

    @property
    def failed(self):
        return self.result is None

    def to_dict(self):
        data = {
            'trial_index': self.trial_index,
            'seed': self.seed,
            'm': self.m,
            'snr_db': self.snr_db,
            'failed': self.failed,
            'error': self.error,
        }
        if self.result is not None:
            data.update(self.result.to_dict())
            data['final_nmse_db'] = format_db(self.result.final_nmse_db)
        return data


def _finite_or_none(value):
    return float(value) if np.isfinite(value) else None


@dataclass
class Summary:
    trials: int
    failed: int
    mean_nmse_db: float
    stderr_db: float
    median_nmse_db: float
    mean_iterations: float
    converged_fraction: float
    seeds: list = field(default_factory=list)

    def to_dict(self):
        return {
            'trials': self.trials,
            'failed': self.failed,
            'mean_nmse_db': format_db(self.mean_nmse_db),
            'stderr_db': _finite_or_none(self.stderr_db),
            'median_nmse_db': format_db(self.median_nmse_db),
            'mean_iterations': _finite_or_none(self.mean_iterations),
            'converged_fraction': self.converged_fraction,
            'seeds': self.seeds,
        }


def trial_seed(config, trial_index):
    return config.base_seed + trial_index


def build_operators(config, m, seed):
    """ One shared operator, or one per pilot subcarrier seeded seed*P + p """
    if config.shared_operator:
        return make_sensing_operator(config.n, m, config.kind, seed)

    return [
        make_sensing_operator(
            config.n, m, config.kind, seed * config.p_taps + p
        )
        for p in range(config.p_taps)
    ]


def load_channel(config):
    """ The channel of a FILE source, in the angle-delay domain """
    channel = to_domain(formats.load(config.channel_file), Domain.ANGLE_DELAY)
    if channel.shape != (config.n, config.p_taps):
        raise InvalidValue(
            'channel file is {shape}, config expects ({n}, {p})'.format(
                shape=channel.shape, n=config.n, p=config.p_taps
            )
        )
    return channel


class FrequencyPrior(NamedTuple):
    activity: float
    p01: float
    sigma2: float


def frequency_prior(config):
    """ Support chain and slab variance of H_f under the generator

    A row of H_f is nonzero if any tap is active at that angle, so its
    support is the union of the tap chains. With q the probability that a
    tap is off at one angle and r that it is off at two neighbouring
    angles, the row is active with probability 1 - prod(q) and switches
    off with probability (prod(q) - prod(r)) / (1 - prod(q)). The slab
    variance spreads the expected row energy over the P subcarriers. """
    spec = config.channel_spec()
    taps = slice(0, spec.l_max)
    gamma = spec.gamma[taps]
    q = 1 - gamma * spec.activity
    r = 1 - gamma + gamma * (1 - spec.activity) * (1 - spec.p10)

    activity = float(np.clip(1 - np.prod(q), PROB_MIN, PROB_MAX))
    p01 = (np.prod(q) - np.prod(r)) / activity
    # the union chain is stationary, so p10 = p01 activity / (1 - activity)
    p01 = float(np.clip(p01, PROB_MIN, PROB_MAX * (1 - activity) / activity))

    energy = np.sum(gamma * spec.activity * spec.tap_variances[taps])
    sigma2 = max(energy / (spec.p_taps * activity), 1e-12)
    return FrequencyPrior(activity, p01, sigma2)


def known_params(config):
    """ Prior parameters matching the synthetic generator """
    if config.algorithm == Algorithm.STCS_DS:
        spec = config.channel_spec()
        gamma = np.zeros(spec.p_taps)
        gamma[: spec.l_max] = spec.gamma[: spec.l_max]
        return DsParams(
            lambda_d=spec.activity,
            p01=spec.p01,
            p10=spec.p10,
            sigma2_d=spec.tap_variances,
            gamma=np.clip(gamma, PROB_MIN, PROB_MAX),
            epsilon=config.epsilon,
        )

    prior = frequency_prior(config)
    if config.algorithm == Algorithm.STCS_FS:
        return FsParams(
            lambda_f=prior.activity, p01=prior.p01, sigma2_f=prior.sigma2
        )
    return BGPrior(pi=prior.activity, sigma2_h=prior.sigma2)


def make_denoiser(config, params):
    if config.algorithm == Algorithm.STCS_DS:
        return DelaySupportDenoiser(params, config.ds_mode)
    if config.algorithm == Algorithm.STCS_FS:
        return FrequencySupportDenoiser(params)
    return IidDenoiser(params, Domain.ANGLE_FREQUENCY)


def make_learner(config, y, ops):
    """ Initial EM parameters and the learner that updates them """
    if config.algorithm == Algorithm.STCS_DS:
        params = em_init_ds(y, ops)
        return params, DsLearner(params, config.lambda_update)
    if config.algorithm == Algorithm.STCS_FS:
        params = em_init_fs(y, ops)
        learner = FsLearner(params, config.lambda_update, config.tied_sigma)
        return params, learner
    params = em_init_iid(y, ops)
    return params, IidLearner(params)


def working_domain(config):
    if config.algorithm == Algorithm.STCS_DS:
        return Domain.ANGLE_DELAY
    return Domain.ANGLE_FREQUENCY


def draw_trial(config, m, snr_db, seed):
    """ Channel, operators and frequency-domain observations of one trial

    The seed drives the operators; the channel and the noise use independent
    streams spawned from it. """
    channel_seq, noise_seq = np.random.SeedSequence(seed).spawn(2)

    if config.source == ChannelSource.FILE:
        channel = load_channel(config)
        power = channel.power() / (config.n * config.p_taps)
    else:
        channel = generate_channel(
            config.channel_spec(seed), np.random.default_rng(channel_seq)
        )
        power = config.channel_spec().mean_entry_power()

    ops = build_operators(config, m, seed)
    # pilots are observed per subcarrier, i.e. in the frequency domain
    y = observe(
        ops,
        to_domain(channel, Domain.ANGLE_FREQUENCY),
        noise_variance(power, snr_db),
        np.random.default_rng(noise_seq),
    )
    return channel, ops, y


def simulate(config, m, snr_db, trial_index, record_nmse=True):
    """ Draw one trial and run the estimator on it

    Without `record_nmse` no NMSE trace is kept, so all-zero channels run
    too. """
    seed = trial_seed(config, trial_index)
    channel, ops, y = draw_trial(config, m, snr_db, seed)
    y = to_domain(y, working_domain(config))

    learner = None
    if config.em:
        params, learner = make_learner(config, y, ops)
    else:
        params = known_params(config)

    return run_turbo(
        ops,
        y,
        make_denoiser(config, params),
        config.turbo_config(),
        truth=channel if record_nmse else None,
        learner=learner,
        seed=seed,
    )


def run_trial(config, m, snr_db, trial_index):
    """ One isolated trial; errors are logged and returned, not raised """
    seed = trial_seed(config, trial_index)
    outcome = TrialOutcome(trial_index, seed, m, snr_db)
    try:
        outcome.result = simulate(config, m, snr_db, trial_index)
    except Exception as e:
        logger.exception(
            'trial %d (seed %d, m=%d, snr=%s dB) failed',
            trial_index, seed, m, snr_db,
        )
        outcome.error = '{cls}: {msg}'.format(cls=type(e).__name__, msg=e)
    return outcome


def run_trials(config, m, snr_db, workers=1):
    """ All trials of one grid point, ordered by trial index """
    indices = range(config.trials)
    if workers > 1:
        count = len(indices)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(
                pool.map(
                    run_trial,
                    [config] * count,
                    [m] * count,
                    [snr_db] * count,
                    indices,
                )
            )
    return [run_trial(config, m, snr_db, i) for i in indices]


def _to_db(value):
    if value <= 0:
        return float('-inf')
    return float(10 * np.log10(value))


def summarize(outcomes):
    """ Mean NMSE (averaged linearly, reported in dB), its standard error,
    the median and the convergence statistics; failed and non-finite trials
    are excluded and counted """
    usable = [
        o for o in outcomes
        if not o.failed and o.result.final_nmse_db is not None
        and not np.isnan(o.result.final_nmse_db)
        and not np.isposinf(o.result.final_nmse_db)
    ]
    failed = len(outcomes) - len(usable)
    if failed:
        logger.warning('%d of %d trials failed', failed, len(outcomes))

    if not usable:
        return Summary(len(outcomes), failed, float('nan'), float('nan'),
                       float('nan'), float('nan'), 0.0, [])

    db = np.array([o.result.final_nmse_db for o in usable])
    linear = 10 ** (db / 10)
    mean = float(linear.mean())
    if len(linear) > 1 and mean > 0:
        stderr = linear.std(ddof=1) / np.sqrt(len(linear))
        stderr_db = float(10 / np.log(10) * stderr / mean)
    else:
        stderr_db = 0.0

    return Summary(
        trials=len(outcomes),
        failed=failed,
        mean_nmse_db=_to_db(mean),
        stderr_db=stderr_db,
        median_nmse_db=float(np.median(db)),
        mean_iterations=float(np.mean([o.result.iterations_used
                                       for o in usable])),
        converged_fraction=float(np.mean([o.result.converged
                                          for o in usable])),
        seeds=[o.seed for o in outcomes],
    )


SWEEP_COLUMNS = (
    'snr_db', 'm', 'algorithm', 'mean_nmse_db', 'stderr_db', 'trials'
)


def sweep(config, workers=1):
    """ Mean NMSE over the m x snr_db grid

    Returns one row per cell and the outcomes of all trials. """
    rows = []
    outcomes = []
    for snr_db in config.snr_db:
        for m in config.m:
            cell = run_trials(config, m, snr_db, workers)
            outcomes.extend(cell)
            summary = summarize(cell)
            rows.append({
                'snr_db': snr_db,
                'm': m,
                'algorithm': config.algorithm.value,
                'mean_nmse_db': summary.mean_nmse_db,
                'stderr_db': summary.stderr_db,
                'trials': summary.trials - summary.failed,
            })
            if summary.failed:
                logger.warning(
                    'cell snr=%s dB, m=%d: %d trials failed',
                    snr_db, m, summary.failed,
                )
    return rows, outcomes


def monotonicity_violations(rows):
    """ Neighbouring cells where more SNR or more pilots made the mean NMSE
    worse by more than twice the standard errors """
    cells = {(r['snr_db'], r['m']): r for r in rows}
    snrs = sorted({r['snr_db'] for r in rows})
    ms = sorted({r['m'] for r in rows})

    def _worse(low, high):
        slack = 2 * (low['stderr_db'] + high['stderr_db'])
        return high['mean_nmse_db'] > low['mean_nmse_db'] + slack

    violations = []
    for m in ms:
        for a, b in zip(snrs, snrs[1:]):
            if _worse(cells[(a, m)], cells[(b, m)]):
                violations.append(('snr_db', m, a, b))
    for snr in snrs:
        for a, b in zip(ms, ms[1:]):
            if _worse(cells[(snr, a)], cells[(snr, b)]):
                violations.append(('m', snr, a, b))

    for axis, fixed, a, b in violations:
        logger.warning(
            'NMSE increases along %s from %s to %s (other axis at %s)',
            axis, a, b, fixed,
        )
    return violations


def to_csv(rows, columns):
    out = io.StringIO()
    writer = csv.writer(out, lineterminator='\n')
    writer.writerow(columns)
    for row in rows:
        writer.writerow([
            format_db(row[c]) if isinstance(row[c], float) else row[c]
            for c in columns
        ])
    return out.getvalue()


def simulated_trace_db(outcomes, length):
    """ Mean NMSE per iteration; finished trials hold their final value """
    traces = [o.result.nmse_trace_db for o in outcomes if not o.failed]
    if not traces:
        return []

    padded = np.array([
        list(t[:length]) + [t[-1]] * (length - len(t)) for t in traces
    ])
    linear = 10 ** (padded / 10)
    return [_to_db(v) for v in linear.mean(axis=0)]


class SeOverlay(NamedTuple):
    state: object
    outcomes: list
    summary: Summary
    rows: list


SE_COLUMNS = (
    'iteration', 'se_nmse_db', 'se_posterior_nmse_db', 'simulated_nmse_db'
)


def se_overlay(config, workers=1):
    """ State evolution prediction next to simulated traces

    Uses the first grid point and known parameters. """
    m, snr_db = config.m[0], config.snr_db[0]
    spec = config.channel_spec()
    sigma2 = noise_variance(spec.mean_entry_power(), snr_db)
    denoiser = make_denoiser(config, known_params(config))

    state = se_fixed_point(
        sigma2,
        m,
        config.n,
        denoiser,
        spec,
        tol=config.se_tol,
        max_iter=config.se_max_iter,
        trials=config.se_trials,
        rng=config.base_seed,
        workers=workers,
    )

    outcomes = run_trials(config.replace(em=False), m, snr_db, workers)
    summary = summarize(outcomes)

    length = max(
        [len(state.trajectory)]
        + [len(o.result.nmse_trace_db) for o in outcomes if not o.failed]
    )
    simulated = simulated_trace_db(outcomes, length)
    predicted = state.predicted_trace_db()

    rows = []
    for i in range(length):
        step = state.trajectory[min(i, len(state.trajectory) - 1)]
        rows.append({
            'iteration': i + 1,
            'se_nmse_db': _to_db(step.tau_a / state.signal_power),
            'se_posterior_nmse_db': predicted[min(i, len(predicted) - 1)],
            'simulated_nmse_db': simulated[i] if simulated else float('nan'),
        })

    if simulated:
        gap = abs(_to_db(state.predicted_posterior_nmse) - simulated[-1])
        logger.info(
            '%s at m=%d, %s dB: SE and simulation differ by %.2f dB',
            config.algorithm.value, m, snr_db, gap,
        )

    return SeOverlay(state, outcomes, summary, rows)


BENCH_COLUMNS = ('n', 'p_taps', 'algorithm', 'seconds_per_iteration')


def _bench_point(config, n, p_taps):
    m = max(1, round(config.m[0] / config.n * n))
    bench = config.replace(
        n=n,
        p_taps=p_taps,
        l_max=min(config.l_max, p_taps),
        m=(m,),
        max_iters=config.bench_iters,
        stop_tol=0.0,
        trials=1,
        source=ChannelSource.SYNTHETIC,
        channel_file=None,
    )

    started = time.perf_counter()
    result = simulate(bench, m, bench.snr_db[0], 0, record_nmse=False)
    elapsed = time.perf_counter() - started
    return elapsed / result.iterations_used


def bench(config, limit=SCALING_LIMIT):
    """ Per-iteration wall time over the bench_n x bench_p grid

    The pilot count scales with N at the ratio of the first m. Returns the
    rows and the time ratios of consecutive N doublings per P. """
    rows = []
    for p_taps in config.bench_p:
        for n in config.bench_n:
            rows.append({
                'n': n,
                'p_taps': p_taps,
                'algorithm': config.algorithm.value,
                'seconds_per_iteration': _bench_point(config, n, p_taps),
            })

    ratios = []
    for p_taps in config.bench_p:
        timings = sorted(
            (r['n'], r['seconds_per_iteration'])
            for r in rows if r['p_taps'] == p_taps
        )
        for (n_a, t_a), (n_b, t_b) in zip(timings, timings[1:]):
            if n_b != 2 * n_a:
                continue
            ratio = t_b / t_a
            ratios.append((p_taps, n_a, n_b, ratio))
            if ratio > limit:
                logger.warning(
                    'doubling N from %d to %d at P=%d slowed an iteration '
                    'down by %.2f (limit %.2f)',
                    n_a, n_b, p_taps, ratio, limit,
                )
    return rows, ratios
