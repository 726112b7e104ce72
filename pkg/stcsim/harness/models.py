import uuid

from django.db import models


class Experiment(models.Model):
    """ A persisted run, sweep or state evolution command """

    COMMANDS = [('run', 'run'), ('sweep', 'sweep'), ('se', 'se')]

    # primary key, also used in the results API
    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)

    # the timestamp at which the experiment has been stored
    created = models.DateTimeField(auto_now_add=True, db_index=True)

    command = models.CharField(max_length=8, choices=COMMANDS)

    algorithm = models.CharField(max_length=16)

    # the full configuration in the key-value file format
    config_text = models.TextField()

    base_seed = models.BigIntegerField()

    # the summary, sweep rows or SE trajectory, as produced by the command
    summary = models.JSONField(default=dict)

    class Meta:
        ordering = ['-created']

    def __str__(self):
        return '{command} {algorithm} ({id})'.format(
            command=self.command, algorithm=self.algorithm, id=self.id
        )


class TrialRecord(models.Model):
    """ The outcome of one trial of an experiment """

    experiment = models.ForeignKey(
        Experiment, on_delete=models.CASCADE, related_name='trials'
    )

    trial_index = models.PositiveIntegerField()

    m = models.PositiveIntegerField()

    snr_db = models.FloatField()

    seed = models.BigIntegerField()

    iterations_used = models.PositiveIntegerField(default=0)

    converged = models.BooleanField(default=False)

    # None for failed trials and exact (-inf dB) recovery
    final_nmse_db = models.FloatField(null=True)

    # per-iteration NMSE in dB, rendered as strings so that -inf survives
    nmse_trace = models.JSONField(default=list)

    wall_time = models.FloatField(default=0.0)

    failed = models.BooleanField(default=False)

    message = models.TextField(blank=True)

    learned_params = models.JSONField(null=True)

    column_activity = models.JSONField(null=True)

    class Meta:
        ordering = ['m', 'snr_db', 'trial_index']
        unique_together = [('experiment', 'm', 'snr_db', 'trial_index')]

    @classmethod
    def from_outcome(cls, experiment, outcome):
        data = outcome.to_dict()
        result = outcome.result
        final = None
        if result is not None and result.final_nmse_db is not None:
            if float('-inf') < result.final_nmse_db < float('inf'):
                final = result.final_nmse_db

        return cls(
            experiment=experiment,
            trial_index=outcome.trial_index,
            m=outcome.m,
            snr_db=outcome.snr_db,
            seed=outcome.seed,
            iterations_used=data.get('iterations_used', 0),
            converged=data.get('converged', False),
            final_nmse_db=final,
            nmse_trace=data.get('nmse_trace_db', []),
            wall_time=data.get('wall_time', 0.0),
            failed=outcome.failed,
            message=outcome.error or '',
            learned_params=data.get('learned_params'),
            column_activity=data.get('column_activity'),
        )
