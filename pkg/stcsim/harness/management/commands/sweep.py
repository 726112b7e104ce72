from stcsim.harness.commands import ExperimentCommand, json_rows
from stcsim.harness.runner import (
    SWEEP_COLUMNS,
    sweep,
    monotonicity_violations,
    to_csv,
)


class Command(ExperimentCommand):
    help = 'Mean NMSE over the m x snr_db grid as CSV'

    def handle(self, *args, **options):
        config = self.get_config(options)

        rows, outcomes = sweep(config, options['workers'])
        self.stdout.write(to_csv(rows, SWEEP_COLUMNS), ending='')

        violations = monotonicity_violations(rows)
        for axis, fixed, a, b in violations:
            self.stderr.write(
                'NMSE not monotone in {axis} between {a} and {b} '
                '(at {fixed})'.format(axis=axis, a=a, b=b, fixed=fixed)
            )

        if options['save']:
            summary = {
                'rows': json_rows(rows),
                'violations': [list(v) for v in violations],
            }
            self.save('sweep', config, summary, outcomes)

        self.check_strict(options, outcomes)
