""" Shared parts of the experiment management commands """

import math

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError
from django.db import transaction

from stcsim.engine import format_db
from .config import ConfigError, load_config
from .models import Experiment, TrialRecord


# command-line flags and the configuration keys they set
FLAGS = [
    ('--algorithm', 'algorithm', str),
    ('--kind', 'kind', str),
    ('--n', 'n', int),
    ('--p', 'p_taps', int),
    ('--l', 'l_max', int),
    ('--m', 'm', str),
    ('--snr', 'snr_db', str),
    ('--trials', 'trials', int),
    ('--seed', 'base_seed', int),
    ('--ds-mode', 'ds_mode', str),
    ('--channel-file', 'channel_file', str),
    ('--max-iters', 'max_iters', int),
]


def defaults():
    """ Configuration defaults from the STCS_DEFAULTS setting """
    values = settings.STCS_DEFAULTS
    return {
        key: values[key]
        for key in ('max_iters', 'stop_tol', 'damping', 'v_min', 'v_max',
                    'epsilon', 'se_trials', 'se_tol', 'se_max_iter')
        if key in values
    }


def jsonable(value):
    """ Non-finite floats rendered as strings, which JSON can not hold """
    if isinstance(value, dict):
        return {k: jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [jsonable(v) for v in value]
    if isinstance(value, float) and not math.isfinite(value):
        return format_db(value)
    return value


def json_rows(rows):
    """ Rows with dB values rendered like in the CSV output """
    return [
        {k: format_db(v) if isinstance(v, float) else v for k, v in r.items()}
        for r in rows
    ]


class ExperimentCommand(BaseCommand):
    """ Base class of commands that take an experiment configuration

    Values come from the STCS_DEFAULTS setting, then the --config file,
    then the individual flags. """

    def add_arguments(self, parser):
        parser.add_argument('--config', help='experiment configuration file')
        for flag, key, cast in FLAGS:
            parser.add_argument(flag, dest=key, type=cast)
        parser.add_argument('--em', action='store_true', default=None,
                            help='learn the prior parameters with EM')
        parser.add_argument('--workers', type=int,
                            default=settings.STCS_WORKERS)
        parser.add_argument('--strict', action='store_true',
                            help='fail if any trial failed')
        parser.add_argument('--save', action='store_true',
                            help='store the results in the database')

    def get_config(self, options):
        text = None
        if options.get('config'):
            try:
                with open(options['config']) as f:
                    text = f.read()
            except OSError as e:
                raise CommandError(str(e))

        overrides = defaults() if text is None else {}
        for _, key, _ in FLAGS:
            if options.get(key) is not None:
                overrides[key] = options[key]
        if options.get('em'):
            overrides['em'] = True
        if options.get('channel_file'):
            overrides['source'] = 'FILE'

        if text is None:
            text = 'schema_version = 1'

        try:
            return load_config(text, **overrides)
        except ConfigError as ce:
            raise CommandError(str(ce))

    def check_strict(self, options, outcomes):
        failed = [o for o in outcomes if o.failed]
        if options.get('strict') and failed:
            raise CommandError(
                '{count} of {total} trials failed'.format(
                    count=len(failed), total=len(outcomes)
                )
            )

    @transaction.atomic
    def save(self, command, config, summary, outcomes=()):
        experiment = Experiment.objects.create(
            command=command,
            algorithm=config.algorithm.value,
            config_text=config.to_text(),
            base_seed=config.base_seed,
            summary=jsonable(summary),
        )
        TrialRecord.objects.bulk_create(
            [TrialRecord.from_outcome(experiment, o) for o in outcomes]
        )
        self.stderr.write('saved experiment {id}'.format(id=experiment.id))
        return experiment
