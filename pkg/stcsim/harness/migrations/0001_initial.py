from django.db import migrations, models
import django.db.models.deletion
import uuid


class Migration(migrations.Migration):

    initial = True

    dependencies = []

    operations = [
        migrations.CreateModel(
            name='Experiment',
            fields=[
                (
                    'id',
                    models.UUIDField(
                        default=uuid.uuid4,
                        editable=False,
                        primary_key=True,
                        serialize=False,
                    ),
                ),
                (
                    'created',
                    models.DateTimeField(auto_now_add=True, db_index=True),
                ),
                (
                    'command',
                    models.CharField(
                        choices=[('run', 'run'), ('sweep', 'sweep'),
                                 ('se', 'se')],
                        max_length=8,
                    ),
                ),
                ('algorithm', models.CharField(max_length=16)),
                ('config_text', models.TextField()),
                ('base_seed', models.BigIntegerField()),
                ('summary', models.JSONField(default=dict)),
            ],
            options={'ordering': ['-created']},
        ),
        migrations.CreateModel(
            name='TrialRecord',
            fields=[
                (
                    'id',
                    models.AutoField(
                        auto_created=True,
                        primary_key=True,
                        serialize=False,
                        verbose_name='ID',
                    ),
                ),
                ('trial_index', models.PositiveIntegerField()),
                ('m', models.PositiveIntegerField()),
                ('snr_db', models.FloatField()),
                ('seed', models.BigIntegerField()),
                ('iterations_used', models.PositiveIntegerField(default=0)),
                ('converged', models.BooleanField(default=False)),
                ('final_nmse_db', models.FloatField(null=True)),
                ('nmse_trace', models.JSONField(default=list)),
                ('wall_time', models.FloatField(default=0.0)),
                ('failed', models.BooleanField(default=False)),
                ('message', models.TextField(blank=True)),
                ('learned_params', models.JSONField(null=True)),
                ('column_activity', models.JSONField(null=True)),
                (
                    'experiment',
                    models.ForeignKey(
                        on_delete=django.db.models.deletion.CASCADE,
                        related_name='trials',
                        to='harness.experiment',
                    ),
                ),
            ],
            options={
                'ordering': ['m', 'snr_db', 'trial_index'],
                'unique_together': {('experiment', 'm', 'snr_db',
                                     'trial_index')},
            },
        ),
    ]
