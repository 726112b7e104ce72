from django.contrib import admin

from .models import Experiment, TrialRecord


class TrialRecordInline(admin.TabularInline):
    model = TrialRecord
    fields = [
        'trial_index', 'm', 'snr_db', 'seed', 'final_nmse_db',
        'iterations_used', 'converged', 'failed',
    ]
    readonly_fields = fields
    extra = 0


@admin.register(Experiment)
class ExperimentAdmin(admin.ModelAdmin):
    list_display = ['id', 'created', 'command', 'algorithm', 'base_seed']
    list_filter = ['command', 'algorithm']
    inlines = [TrialRecordInline]


@admin.register(TrialRecord)
class TrialRecordAdmin(admin.ModelAdmin):
    list_display = ['experiment', 'trial_index', 'm', 'snr_db',
                    'final_nmse_db', 'failed']
    list_filter = ['failed', 'converged']
