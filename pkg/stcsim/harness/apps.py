from django.apps import AppConfig


class HarnessConfig(AppConfig):
    name = 'stcsim.harness'
    verbose_name = 'Experiments'
