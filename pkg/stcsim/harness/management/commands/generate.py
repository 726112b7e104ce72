import os

from django.core.management.base import CommandError

from stcsim.linops import to_descriptor
from stcsim.chanmodel import Domain, ChannelError, to_domain
from stcsim.chanmodel import formats
from stcsim.harness.commands import ExperimentCommand
from stcsim.harness.runner import draw_trial


class Command(ExperimentCommand):
    help = 'Write a channel, its observations and the sensing operator'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--output', required=True,
                            help='directory the files are written to')
        parser.add_argument('--binary', action='store_true',
                            help='use the binary instead of the text format')

    def handle(self, *args, **options):
        config = self.get_config(options)
        output = options['output']
        binary = options['binary']
        suffix = '.bin' if binary else '.txt'
        m, snr_db = config.m[0], config.snr_db[0]

        try:
            channel, ops, y = draw_trial(config, m, snr_db, config.base_seed)
        except (ChannelError, formats.ChannelFormatError, OSError) as e:
            raise CommandError(str(e))

        files = {
            'channel_delay': to_domain(channel, Domain.ANGLE_DELAY),
            'channel_freq': to_domain(channel, Domain.ANGLE_FREQUENCY),
            'observation_freq': y,
        }
        if config.shared_operator:
            files['observation_delay'] = to_domain(y, Domain.ANGLE_DELAY)

        operators = ops if isinstance(ops, list) else [ops]
        try:
            os.makedirs(output, exist_ok=True)
            for name, matrix in files.items():
                formats.save(
                    matrix, os.path.join(output, name + suffix), binary
                )

            for p, op in enumerate(operators):
                name = 'operator.txt' if len(operators) == 1 else \
                    'operator_{p}.txt'.format(p=p)
                with open(os.path.join(output, name), 'w') as f:
                    f.write(to_descriptor(op) + '\n')

            with open(os.path.join(output, 'experiment.cfg'), 'w') as f:
                f.write(config.to_text())
        except OSError as e:
            raise CommandError(str(e))

        self.stdout.write(to_descriptor(operators[0]))
        self.stdout.write('sigma2 = {s!r}'.format(s=y.sigma2))
