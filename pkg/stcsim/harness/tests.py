import io
import os
import json
import uuid
import tempfile
import datetime

import numpy as np
from freezegun import freeze_time

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase, TestCase, override_settings
from django.urls import reverse

from stcsim.linops import SensingKind, from_descriptor
from stcsim.chanmodel import Domain, formats, generate_channel
from stcsim.ds import DsMode, DsParams
from stcsim.fs import FsParams
from stcsim.priors import BGPrior
from .config import (
    Algorithm,
    ConfigError,
    UnknownKey,
    SchemaVersionError,
    InvalidValue,
    ExperimentConfig,
    parse_config,
    load_config,
)
from .models import Experiment, TrialRecord
from .runner import (
    SWEEP_COLUMNS,
    SE_COLUMNS,
    build_operators,
    frequency_prior,
    known_params,
    run_trials,
    summarize,
    sweep,
    monotonicity_violations,
    to_csv,
    se_overlay,
    bench,
)


SAVE_TIME = '2026-03-04T05:06:07Z'

# a small channel that is almost surely nonzero
SMALL = dict(n=32, p_taps=4, l_max=2, p10=0.2, p01=0.2)


def small_config(**changes):
    values = dict(SMALL, m=(32,), snr_db=(float('inf'),), trials=2)
    values.update(changes)
    return ExperimentConfig(**values)


class ConfigTests(SimpleTestCase):
    def test_parse(self):
        config = load_config(
            'schema_version = 1\n'
            '# a comment\n'
            'algorithm = stcs_fs\n'
            'm = 52, 103\n'
            'snr_db = 10,30\n'
            'em = true\n'
        )
        self.assertEqual(config.algorithm, Algorithm.STCS_FS)
        self.assertEqual(config.m, (52, 103))
        self.assertEqual(config.snr_db, (10.0, 30.0))
        self.assertTrue(config.em)

    def test_defaults(self):
        config = load_config('schema_version = 1')
        self.assertEqual((config.n, config.p_taps, config.l_max),
                         (256, 32, 16))
        self.assertEqual(config.m, (103,))
        self.assertEqual(config.kind, SensingKind.DFT_RP)

    def test_overrides(self):
        config = load_config('schema_version = 1\nn = 64', n=32, m='16')
        self.assertEqual(config.n, 32)
        self.assertEqual(config.m, (16,))

    def test_unknown_key(self):
        with self.assertRaises(UnknownKey):
            parse_config('schema_version = 1\ncolour = red')

    def test_schema_version(self):
        with self.assertRaises(SchemaVersionError):
            parse_config('n = 10')
        with self.assertRaises(SchemaVersionError):
            parse_config('n = 10\nschema_version = 1')
        with self.assertRaises(SchemaVersionError):
            load_config('schema_version = 2')

    def test_malformed_line(self):
        with self.assertRaises(ConfigError):
            parse_config('schema_version = 1\njust text')

    def test_invalid_values(self):
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nn = many')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nn = 64\nm = 65')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nm =')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nalgorithm = LASSO')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nsource = FILE')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\nshared_operator = false')
        with self.assertRaises(InvalidValue):
            load_config('schema_version = 1\np10 = 1.5')

    def test_text_round_trip(self):
        config = small_config(algorithm='STCS_DS', ds_mode='PAPER_SCHEDULE',
                              snr_db=(10.0, float('inf')))
        self.assertEqual(load_config(config.to_text()), config)

    def test_damping_defaults(self):
        self.assertEqual(
            small_config(algorithm='TURBO_CS').turbo_config().damping, 1.0
        )
        self.assertEqual(
            small_config(algorithm='STCS_DS').turbo_config().damping, 0.7
        )
        config = small_config(algorithm='STCS_FS', damping=0.5)
        self.assertEqual(config.turbo_config().damping, 0.5)
        self.assertEqual(load_config(config.to_text()), config)


class KnownParamsTests(SimpleTestCase):
    def test_delay_support(self):
        params = known_params(small_config(algorithm='STCS_DS'))
        self.assertIsInstance(params, DsParams)
        np.testing.assert_allclose(params.gamma, [1 - 1e-6] * 2 + [1e-6] * 2)
        self.assertAlmostEqual(params.lambda_d, 0.5)

    def test_frequency_support(self):
        config = small_config(algorithm='STCS_FS', l_max=1)
        params = known_params(config)
        self.assertIsInstance(params, FsParams)
        # one tap: the row support is the tap's own chain
        self.assertAlmostEqual(params.lambda_f, 0.5)
        self.assertAlmostEqual(params.p01, 0.2)
        self.assertAlmostEqual(params.p10, 0.2)
        np.testing.assert_allclose(params.sigma2_f, 0.25)

    def test_frequency_support_of_two_taps(self):
        params = known_params(small_config(algorithm='STCS_FS'))
        # a row is off with probability 1/4 and stays off with 0.4^2
        self.assertAlmostEqual(params.lambda_f, 0.75)
        self.assertAlmostEqual(params.p01, (0.25 - 0.16) / 0.75)
        self.assertAlmostEqual(params.p10, (0.25 - 0.16) / 0.25)
        np.testing.assert_allclose(params.sigma2_f, 1 / 3)

    def test_frequency_prior_matches_generated_rows(self):
        config = ExperimentConfig(n=32768, p_taps=8, l_max=3, p10=1 / 56,
                                  p01=1 / 8)
        prior = frequency_prior(config)
        self.assertAlmostEqual(prior.activity, 1 - (7 / 8) ** 3)

        h = generate_channel(config.channel_spec(seed=2))
        rows = np.any(h.values != 0, axis=1)
        self.assertAlmostEqual(rows.mean(), prior.activity, delta=0.06)
        switched_off = np.count_nonzero(rows[:-1] & ~rows[1:])
        self.assertAlmostEqual(
            switched_off / np.count_nonzero(rows[:-1]), prior.p01, delta=0.02
        )

    def test_iid(self):
        prior = known_params(small_config(algorithm='TURBO_CS'))
        self.assertIsInstance(prior, BGPrior)
        self.assertAlmostEqual(float(prior.pi), 0.75)


class RunnerTests(SimpleTestCase):
    def test_noiseless_full_sampling(self):
        for algorithm in Algorithm:
            config = small_config(algorithm=algorithm)
            summary = summarize(run_trials(config, 32, float('inf')))
            self.assertEqual(summary.failed, 0)
            self.assertLess(summary.mean_nmse_db, -200, algorithm)

    def test_loopy_schedule(self):
        config = small_config(
            algorithm='STCS_DS', ds_mode=DsMode.PAPER_SCHEDULE,
            m=(20,), snr_db=(30.0,), trials=1,
        )
        outcome = run_trials(config, 20, 30.0)[0]
        self.assertFalse(outcome.failed)
        self.assertEqual(len(outcome.result.column_activity), 4)

    def test_em(self):
        for algorithm in Algorithm:
            config = small_config(algorithm=algorithm, em=True, trials=1,
                                  snr_db=(30.0,), max_iters=5)
            outcome = run_trials(config, 32, 30.0)[0]
            self.assertFalse(outcome.failed, outcome.error)
            self.assertEqual(len(outcome.result.learned_params),
                             outcome.result.iterations_used)

    def test_deterministic(self):
        config = small_config(algorithm='STCS_FS', snr_db=(20.0,),
                              m=(20,), base_seed=9)
        first = [o.to_dict() for o in run_trials(config, 20, 20.0)]
        second = [o.to_dict() for o in run_trials(config, 20, 20.0)]
        for a, b in zip(first, second):
            a.pop('wall_time')
            b.pop('wall_time')
        self.assertEqual(first, second)
        self.assertEqual([d['seed'] for d in first], [9, 10])

    def test_failed_trials_are_isolated(self):
        config = small_config(source='FILE', channel_file='/nonexistent.txt')
        with self.assertLogs('stcsim.harness.runner', 'ERROR'):
            outcomes = run_trials(config, 32, 30.0)
        self.assertTrue(all(o.failed for o in outcomes))
        self.assertIn('FileNotFoundError', outcomes[0].error)
        summary = summarize(outcomes)
        self.assertEqual(summary.failed, 2)
        self.assertIsNone(summary.to_dict()['stderr_db'])

    def test_operators_per_subcarrier(self):
        config = small_config(algorithm='STCS_FS', shared_operator=False)
        ops = build_operators(config, 16, seed=3)
        self.assertEqual([op.seed for op in ops], [12, 13, 14, 15])

        summary = summarize(run_trials(config, 32, float('inf')))
        self.assertLess(summary.mean_nmse_db, -200)

    def test_sweep(self):
        config = small_config(algorithm='TURBO_CS', m=(8, 32),
                              snr_db=(-10.0, 30.0), max_iters=10)
        rows, outcomes = sweep(config)
        self.assertEqual(len(rows), 4)
        self.assertEqual(len(outcomes), 8)
        corner = {(r['snr_db'], r['m']): r['mean_nmse_db'] for r in rows}
        self.assertLessEqual(corner[(30.0, 32)], corner[(-10.0, 8)])

        lines = to_csv(rows, SWEEP_COLUMNS).splitlines()
        self.assertEqual(
            lines[0], 'snr_db,m,algorithm,mean_nmse_db,stderr_db,trials'
        )
        self.assertEqual(len(lines), 5)

    def test_monotonicity_violations(self):
        rows = [
            {'snr_db': 0.0, 'm': 10, 'mean_nmse_db': -5.0, 'stderr_db': 0.1},
            {'snr_db': 10.0, 'm': 10, 'mean_nmse_db': -2.0,
             'stderr_db': 0.1},
        ]
        with self.assertLogs('stcsim.harness.runner', 'WARNING'):
            violations = monotonicity_violations(rows)
        self.assertEqual(violations, [('snr_db', 10, 0.0, 10.0)])

    def test_se_overlay(self):
        config = small_config(algorithm='STCS_DS', m=(20,), snr_db=(20.0,),
                              se_trials=5, se_max_iter=5, max_iters=5)
        overlay = se_overlay(config)
        self.assertTrue(overlay.rows)
        self.assertEqual(tuple(overlay.rows[0]), SE_COLUMNS)
        self.assertEqual(overlay.summary.trials, 2)

    def test_bench(self):
        config = small_config(algorithm='STCS_FS', m=(8,), n=16,
                              bench_n=(8, 16), bench_p=(2,), bench_iters=2,
                              snr_db=(30.0,))
        rows, ratios = bench(config, limit=1e9)
        self.assertEqual(len(rows), 2)
        self.assertEqual([r[:3] for r in ratios], [(2, 8, 16)])
        self.assertTrue(all(r['seconds_per_iteration'] > 0 for r in rows))


# three of eight taps active, a third of the frequency rows occupied
ACCEPTANCE = dict(
    n=128, p_taps=8, l_max=3, p10=1 / 56, p01=1 / 8,
    m=(64,), snr_db=(30.0,), trials=8,
)


def acceptance_summary(**changes):
    config = ExperimentConfig(**dict(ACCEPTANCE, **changes))
    return summarize(run_trials(config, config.m[0], config.snr_db[0]))


class AcceptanceTests(SimpleTestCase):
    """ Reduced-size runs of the end-to-end behaviour: eight trials at
    N = 128 instead of hundreds at N = 256 """

    def test_ordering(self):
        nmse = {
            algorithm: acceptance_summary(algorithm=algorithm).mean_nmse_db
            for algorithm in Algorithm
        }
        self.assertLess(nmse[Algorithm.STCS_DS], nmse[Algorithm.STCS_FS])
        self.assertLess(nmse[Algorithm.STCS_FS],
                        nmse[Algorithm.TURBO_CS] + 0.5)

    def test_permutation_helps(self):
        for algorithm in ('STCS_FS', 'STCS_DS'):
            rp = acceptance_summary(algorithm=algorithm, kind='DFT_RP')
            dft = acceptance_summary(algorithm=algorithm, kind='DFT')
            self.assertEqual(rp.failed, 0, algorithm)
            self.assertTrue(
                dft.failed > 0 or not dft.mean_nmse_db <= rp.mean_nmse_db,
                algorithm,
            )

    def test_em_close_to_known(self):
        for algorithm in ('STCS_FS', 'STCS_DS'):
            known = acceptance_summary(algorithm=algorithm)
            learned = acceptance_summary(algorithm=algorithm, em=True)
            self.assertEqual(learned.failed, 0, algorithm)
            self.assertLessEqual(
                learned.mean_nmse_db, known.mean_nmse_db + 2.0, algorithm
            )

    def test_convergence_rate(self):
        for algorithm in ('STCS_FS', 'STCS_DS'):
            summary = acceptance_summary(algorithm=algorithm, max_iters=30)
            self.assertEqual(summary.failed, 0, algorithm)
            self.assertGreaterEqual(summary.converged_fraction, 7 / 8,
                                    algorithm)

    def test_state_evolution_matches_simulation(self):
        config = ExperimentConfig(**dict(
            ACCEPTANCE, algorithm='STCS_DS', snr_db=(10.0,),
            se_trials=20, se_max_iter=60,
        ))
        overlay = se_overlay(config)
        predicted = 10 * np.log10(overlay.state.predicted_posterior_nmse)
        self.assertEqual(overlay.summary.failed, 0)
        self.assertLess(abs(predicted - overlay.summary.mean_nmse_db), 2.0)


def run_command(name, *args, **options):
    out, err = io.StringIO(), io.StringIO()
    options.setdefault('workers', 1)
    call_command(name, *args, stdout=out, stderr=err, **options)
    return out.getvalue(), err.getvalue()


COMMAND_OPTIONS = dict(
    n=32, p_taps=4, l_max=2, m='32', snr_db='inf', trials=2,
)


class GenerateCommandTests(SimpleTestCase):
    def generate(self, directory, **options):
        values = dict(COMMAND_OPTIONS, output=directory)
        values.update(options)
        return run_command('generate', **values)

    def test_files(self):
        with tempfile.TemporaryDirectory() as tmp:
            out, _ = self.generate(tmp, algorithm='STCS_DS')
            channel = formats.load(os.path.join(tmp, 'channel_delay.txt'))
            self.assertEqual(channel.shape, (32, 4))
            self.assertEqual(channel.domain, Domain.ANGLE_DELAY)
            self.assertFalse(np.any(channel.values[:, 2:]))

            y = formats.load(os.path.join(tmp, 'observation_freq.txt'))
            self.assertEqual(y.shape, (32, 4))

            with open(os.path.join(tmp, 'operator.txt')) as f:
                op = from_descriptor(f.read())
            self.assertEqual((op.n, op.m), (32, 32))
            self.assertIn('kind = DFT_RP', out)

    def test_deterministic(self):
        with tempfile.TemporaryDirectory() as a, \
                tempfile.TemporaryDirectory() as b:
            self.generate(a, binary=True)
            self.generate(b, binary=True)
            for name in sorted(os.listdir(a)):
                with open(os.path.join(a, name), 'rb') as fa, \
                        open(os.path.join(b, name), 'rb') as fb:
                    self.assertEqual(fa.read(), fb.read(), name)

    def test_inactive_taps(self):
        with tempfile.TemporaryDirectory() as tmp:
            with open(os.path.join(tmp, 'zero.cfg'), 'w') as f:
                f.write('schema_version = 1\ngamma = 0\nn = 32\np_taps = 4\n'
                        'l_max = 2\nm = 16\n')
            run_command('generate', config=os.path.join(tmp, 'zero.cfg'),
                        output=tmp)
            channel = formats.load(os.path.join(tmp, 'channel_delay.txt'))
            self.assertFalse(np.any(channel.values))

    def test_config_errors(self):
        with self.assertRaises(CommandError):
            run_command('generate', config='/nonexistent.cfg', output='x')
        with self.assertRaises(CommandError):
            run_command('generate', n=8, m='9', output='x')


class ExperimentCommandTests(TestCase):
    def test_run(self):
        out, _ = run_command('run', algorithm='STCS_FS', **COMMAND_OPTIONS)
        lines = [json.loads(line) for line in out.splitlines()]
        self.assertEqual(len(lines), 3)
        self.assertEqual([t['trial_index'] for t in lines[:2]], [0, 1])
        summary = lines[2]['summary']
        self.assertEqual(summary['trials'], 2)
        self.assertEqual(Experiment.objects.count(), 0)

    def test_run_save(self):
        with freeze_time(SAVE_TIME):
            run_command('run', algorithm='STCS_DS', save=True,
                        **COMMAND_OPTIONS)

        experiment = Experiment.objects.get()
        self.assertEqual(experiment.command, 'run')
        self.assertEqual(experiment.algorithm, 'STCS_DS')
        self.assertEqual(
            experiment.created,
            datetime.datetime(
                2026, 3, 4, 5, 6, 7, tzinfo=datetime.timezone.utc
            ),
        )
        self.assertEqual(experiment.trials.count(), 2)
        config = load_config(experiment.config_text)
        self.assertEqual(config.n, 32)

    def test_strict(self):
        with self.assertRaises(CommandError):
            run_command('run', channel_file='/nonexistent.txt', strict=True,
                        **COMMAND_OPTIONS)

    def test_sweep(self):
        options = dict(COMMAND_OPTIONS, m='16,32', snr_db='0,30')
        out, _ = run_command('sweep', algorithm='TURBO_CS', save=True,
                             max_iters=10, **options)
        lines = out.splitlines()
        self.assertEqual(lines[0], ','.join(SWEEP_COLUMNS))
        self.assertEqual(len(lines), 5)
        experiment = Experiment.objects.get(command='sweep')
        self.assertEqual(len(experiment.summary['rows']), 4)
        self.assertEqual(experiment.trials.count(), 8)

    def test_se(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = os.path.join(tmp, 'se.cfg')
            with open(cfg, 'w') as f:
                f.write('schema_version = 1\nalgorithm = STCS_FS\nn = 32\n'
                        'p_taps = 4\nl_max = 1\np10 = 0.2\np01 = 0.2\nm = 16\n'
                        'snr_db = 20\n'
                        'trials = 2\nse_trials = 5\nse_max_iter = 4\n'
                        'max_iters = 4\n')
            run_command('se', config=cfg, output=tmp, save=True)

            with open(os.path.join(tmp, 'se.csv')) as f:
                self.assertEqual(f.readline().strip(),
                                 'iter,tau_A,tau_B,mc_stderr')
            with open(os.path.join(tmp, 'overlay.csv')) as f:
                self.assertEqual(f.readline().strip(), ','.join(SE_COLUMNS))

        experiment = Experiment.objects.get(command='se')
        self.assertIn('predicted_nmse', experiment.summary)
        self.assertTrue(experiment.summary['trajectory'])

    def test_se_strict(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = os.path.join(tmp, 'se.cfg')
            with open(cfg, 'w') as f:
                # one recursion step can not meet the tolerance
                f.write('schema_version = 1\nalgorithm = STCS_DS\nn = 32\n'
                        'p_taps = 4\nl_max = 2\np10 = 0.2\np01 = 0.2\nm = 16\n'
                        'snr_db = 20\ntrials = 1\nse_trials = 3\n'
                        'se_max_iter = 1\nmax_iters = 3\n')
            _, err = run_command('se', config=cfg, output=tmp)
            self.assertIn('state evolution did not converge', err)

            with self.assertRaisesMessage(CommandError, 'state evolution'):
                run_command('se', config=cfg, output=tmp, strict=True)

    def test_bench(self):
        with tempfile.TemporaryDirectory() as tmp:
            cfg = os.path.join(tmp, 'bench.cfg')
            with open(cfg, 'w') as f:
                f.write('schema_version = 1\nalgorithm = TURBO_CS\nn = 8\n'
                        'p_taps = 2\nl_max = 1\nm = 4\nbench_n = 8\n'
                        'bench_p = 2\nbench_iters = 1\n')
            out, _ = run_command('bench', config=cfg)
        lines = out.splitlines()
        self.assertEqual(lines[0], 'n,p_taps,algorithm,seconds_per_iteration')
        self.assertTrue(lines[1].startswith('8,2,TURBO_CS,'))


class ResultsApiTests(TestCase):
    def setUp(self):
        with freeze_time(SAVE_TIME):
            self.experiment = Experiment.objects.create(
                command='run',
                algorithm='STCS_FS',
                config_text='schema_version = 1\n',
                base_seed=0,
                summary={'cells': []},
            )
        TrialRecord.objects.create(
            experiment=self.experiment,
            trial_index=0,
            m=103,
            snr_db=30.0,
            seed=0,
            iterations_used=2,
            nmse_trace=['-12.5', '-inf'],
        )
        for _ in range(2):
            Experiment.objects.create(
                command='sweep', algorithm='STCS_DS', config_text='',
                base_seed=1,
            )

    def test_detail(self):
        url = reverse('harness:experiment', args=[self.experiment.id])
        response = self.client.get(url)
        self.assertEqual(response.status_code, 200)
        data = response.json()
        self.assertEqual(data['algorithm'], 'STCS_FS')
        self.assertEqual(data['trials'], 1)
        self.assertEqual(data['created_at'], '2026-03-04T05:06:07Z')
        self.assertIn('trials.csv', response['Link'])

    def test_not_found(self):
        url = reverse('harness:experiment', args=[uuid.uuid4()])
        response = self.client.get(url)
        self.assertEqual(response.status_code, 404)
        self.assertEqual(response.json(), {})

    def test_trial(self):
        url = reverse('harness:trial', args=[self.experiment.id, 0])
        trial = self.client.get(url).json()['trials'][0]
        self.assertEqual(trial['nmse_trace_db'], ['-12.5', '-inf'])

        url = reverse('harness:trial', args=[self.experiment.id, 5])
        self.assertEqual(self.client.get(url).status_code, 404)

    def test_csv(self):
        url = reverse('harness:trials-csv', args=[self.experiment.id])
        response = self.client.get(url)
        self.assertEqual(response['Content-Type'], 'text/csv')
        lines = response.content.decode('ascii').splitlines()
        self.assertEqual(lines[0], 'trial_index,m,snr_db,iteration,nmse_db')
        self.assertEqual(lines[2], '0,103,30.0,2,-inf')

    @override_settings(STCS_RESULTS_PAGE_SIZE=2)
    def test_pagination(self):
        url = reverse('harness:experiments')
        response = self.client.get(url)
        self.assertEqual(len(response.json()['experiments']), 2)
        self.assertEqual(
            response['Link'], '<{url}?page=2>; rel="next"'.format(url=url)
        )

        response = self.client.get(url + '?page=2')
        self.assertEqual(len(response.json()['experiments']), 1)
        self.assertIn('rel="prev"', response['Link'])

        self.assertEqual(self.client.get(url + '?page=7').status_code, 404)
