from django.conf import settings

from stcsim.harness.commands import ExperimentCommand
from stcsim.harness.runner import BENCH_COLUMNS, SCALING_LIMIT, bench, to_csv


class Command(ExperimentCommand):
    help = 'Per-iteration wall time over the bench_n x bench_p grid'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        limit = settings.STCS_DEFAULTS.get(
            'bench_scaling_limit', SCALING_LIMIT
        )
        parser.add_argument('--limit', type=float, default=limit,
                            help='tolerated time ratio when doubling N')

    def handle(self, *args, **options):
        config = self.get_config(options)

        rows, ratios = bench(config, options['limit'])
        self.stdout.write(to_csv(rows, BENCH_COLUMNS), ending='')
        for p_taps, n_a, n_b, ratio in ratios:
            self.stdout.write(
                '# P={p}: N {a} -> {b}: x{r:.2f}'.format(
                    p=p_taps, a=n_a, b=n_b, r=ratio
                )
            )
