from django.urls import path

from . import views


app_name = 'harness'

urlpatterns = [
    path('', views.ExperimentListView.as_view(), name='experiments'),
    path('<uuid:id>', views.ExperimentView.as_view(), name='experiment'),
    path(
        '<uuid:id>/trials/<int:index>',
        views.TrialView.as_view(),
        name='trial',
    ),
    path(
        '<uuid:id>/trials.csv',
        views.TrialsCsvView.as_view(),
        name='trials-csv',
    ),
]
