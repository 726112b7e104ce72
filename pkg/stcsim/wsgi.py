"""
WSGI config for the stcsim results API.

It exposes the WSGI callable as a module-level variable named ``application``.
"""

import os

from django.core.wsgi import get_wsgi_application
from dj_static import Cling

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "stcsim.settings")

application = Cling(get_wsgi_application())
