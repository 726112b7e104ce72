import csv

from django import http
from django.conf import settings
from django.core.paginator import Paginator, EmptyPage, PageNotAnInteger
from django.urls import reverse
from django.views.generic.base import View

from stcsim.utils import get_link_header, page_links, Link
from .models import Experiment, TrialRecord


def experiment_obj(experiment):
    return {
        'id': experiment.id,
        'url': reverse('harness:experiment', args=[experiment.id]),
        'created_at': experiment.created,
        'command': experiment.command,
        'algorithm': experiment.algorithm,
        'base_seed': experiment.base_seed,
    }


class ExperimentListView(View):
    """ Paginated list of stored experiments, newest first """

    def get(self, request):
        paginator = Paginator(
            Experiment.objects.all(), settings.STCS_RESULTS_PAGE_SIZE
        )
        try:
            page = paginator.page(request.GET.get('page', 1))
        except (EmptyPage, PageNotAnInteger):
            return http.JsonResponse({}, status=404)

        response = http.JsonResponse(
            {'experiments': [experiment_obj(e) for e in page]}
        )
        links = page_links('harness:experiments', page)
        if links:
            response['Link'] = get_link_header(links)
        return response


class ExperimentView(View):
    """ Configuration and summary of one experiment """

    def get(self, request, id):
        try:
            experiment = Experiment.objects.get(id=id)
        except Experiment.DoesNotExist:
            return http.JsonResponse({}, status=404)

        data = experiment_obj(experiment)
        data.update(
            {
                'config': experiment.config_text,
                'summary': experiment.summary,
                'trials': experiment.trials.count(),
            }
        )
        response = http.JsonResponse(data)
        response['Link'] = get_link_header([TrialsCsvLink(experiment.id)])
        return response


class TrialView(View):
    """ The NMSE trace and learned parameters of one trial """

    def get(self, request, id, index):
        trials = TrialRecord.objects.filter(
            experiment_id=id, trial_index=index
        )
        if not trials.exists():
            return http.JsonResponse({}, status=404)

        return http.JsonResponse(
            {
                'trials': [
                    {
                        'trial_index': t.trial_index,
                        'm': t.m,
                        'snr_db': t.snr_db,
                        'seed': t.seed,
                        'iterations_used': t.iterations_used,
                        'converged': t.converged,
                        'failed': t.failed,
                        'message': t.message,
                        'nmse_trace_db': t.nmse_trace,
                        'learned_params': t.learned_params,
                        'column_activity': t.column_activity,
                    }
                    for t in trials
                ]
            }
        )


class TrialsCsvView(View):
    """ All NMSE traces of an experiment as CSV """

    def get(self, request, id):
        if not Experiment.objects.filter(id=id).exists():
            return http.JsonResponse({}, status=404)

        response = http.HttpResponse(content_type='text/csv')
        writer = csv.writer(response, lineterminator='\n')
        writer.writerow(['trial_index', 'm', 'snr_db', 'iteration', 'nmse_db'])
        for trial in TrialRecord.objects.filter(experiment_id=id):
            for iteration, nmse_db in enumerate(trial.nmse_trace, start=1):
                writer.writerow(
                    [trial.trial_index, trial.m, trial.snr_db, iteration,
                     nmse_db]
                )
        return response


class TrialsCsvLink(Link):
    """ A HTTP Link header referring to the traces of an experiment """

    RELATION = 'alternate'

    def __new__(cls, id):
        target = reverse('harness:trials-csv', args=[id])
        return super().__new__(cls, target, cls.RELATION)
