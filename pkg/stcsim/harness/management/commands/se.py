import os

from django.core.management.base import CommandError

from stcsim.state_evolution import StateEvolutionError
from stcsim.harness.commands import ExperimentCommand, json_rows
from stcsim.harness.runner import SE_COLUMNS, se_overlay, to_csv


class Command(ExperimentCommand):
    help = 'State evolution prediction next to simulated NMSE traces'

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument('--output',
                            help='directory for se.csv and overlay.csv')

    def handle(self, *args, **options):
        config = self.get_config(options)

        try:
            overlay = se_overlay(config, options['workers'])
        except StateEvolutionError as e:
            raise CommandError(str(e))

        trajectory = overlay.state.to_csv()
        comparison = to_csv(overlay.rows, SE_COLUMNS)

        if options.get('output'):
            os.makedirs(options['output'], exist_ok=True)
            for name, text in (('se.csv', trajectory),
                               ('overlay.csv', comparison)):
                with open(os.path.join(options['output'], name), 'w') as f:
                    f.write(text)
        else:
            self.stdout.write(trajectory)
            self.stdout.write(comparison, ending='')

        state = overlay.state
        diverged = state.oscillating or not state.converged
        if diverged:
            self.stderr.write('state evolution did not converge')

        if options['save']:
            summary = {
                'predicted_nmse': state.predicted_nmse,
                'predicted_posterior_nmse': state.predicted_posterior_nmse,
                'converged': state.converged,
                'oscillating': state.oscillating,
                'clamped': state.clamped,
                'simulated': overlay.summary.to_dict(),
                'rows': json_rows(overlay.rows),
                'trajectory': [
                    {
                        'iter': s.iteration,
                        'tau_A': s.tau_a,
                        'tau_B': s.tau_b,
                        'mc_stderr': s.mc_stderr,
                    }
                    for s in state.trajectory
                ],
            }
            self.save('se', config, summary, overlay.outcomes)

        self.check_strict(options, overlay.outcomes)
        if options.get('strict') and diverged:
            raise CommandError(
                'state evolution {what}'.format(
                    what='oscillates' if state.oscillating
                    else 'did not converge'
                )
            )
