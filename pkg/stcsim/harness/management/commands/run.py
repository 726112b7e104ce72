import json
import logging

from stcsim.harness.commands import ExperimentCommand
from stcsim.harness.runner import run_trials, summarize


logger = logging.getLogger(__name__)


class Command(ExperimentCommand):
    help = 'Run the estimator on every trial and print one JSON line each'

    def handle(self, *args, **options):
        config = self.get_config(options)

        outcomes = []
        cells = []
        for snr_db in config.snr_db:
            for m in config.m:
                logger.info(
                    'running %d trials of %s at m=%d, %s dB (seeds %d..%d)',
                    config.trials, config.algorithm.value, m, snr_db,
                    config.base_seed, config.base_seed + config.trials - 1,
                )
                cell = run_trials(config, m, snr_db, options['workers'])
                for outcome in cell:
                    self.stdout.write(
                        json.dumps(outcome.to_dict(), sort_keys=True)
                    )

                summary = dict(summarize(cell).to_dict(), m=m, snr_db=snr_db)
                self.stdout.write(json.dumps({'summary': summary}))
                cells.append(summary)
                outcomes.extend(cell)

        if options['save']:
            self.save('run', config, {'cells': cells}, outcomes)

        self.check_strict(options, outcomes)
