import os
import dj_database_url

"""
Django settings for the stcsim project.

The numerical packages (linops, chanmodel, priors, engine, fs, ds,
state_evolution, em) do not depend on Django; only the harness app reads
these settings.

For the full list of Django settings and their values, see
https://docs.djangoproject.com/en/3.2/ref/settings/
"""

# Build paths inside the project like this: os.path.join(BASE_DIR, ...)
BASE_DIR = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv(
    'SECRET_KEY', 'stcsim-development-key-not-for-production-use'
)

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('DEBUG', '') == 'true'

# Allow all host headers
ALLOWED_HOSTS = ['*']


# Application definition

INSTALLED_APPS = (
    'django.contrib.admin',
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'django.contrib.sessions',
    'django.contrib.messages',
    'django.contrib.staticfiles',
    'stcsim.harness',
)

MIDDLEWARE = (
    'django.contrib.sessions.middleware.SessionMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.contrib.auth.middleware.AuthenticationMiddleware',
    'django.contrib.messages.middleware.MessageMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
    'django.middleware.security.SecurityMiddleware',
)

ROOT_URLCONF = 'stcsim.urls'

TEMPLATES = [
    {
        'BACKEND': 'django.template.backends.django.DjangoTemplates',
        'DIRS': [],
        'APP_DIRS': True,
        'OPTIONS': {
            'debug': DEBUG,
            'context_processors': [
                'django.template.context_processors.debug',
                'django.template.context_processors.request',
                'django.contrib.auth.context_processors.auth',
                'django.contrib.messages.context_processors.messages',
            ],
        },
    }
]

WSGI_APPLICATION = 'stcsim.wsgi.application'


# Database
# experiment records go to DATABASE_URL, a local SQLite file otherwise

DATABASES = {
    'default': dj_database_url.config(
        default='sqlite:///' + os.path.join(BASE_DIR, 'stcsim.sqlite3')
    )
}

DEFAULT_AUTO_FIELD = 'django.db.models.AutoField'


# Honor the 'X-Forwarded-Proto' header for request.is_secure()
SECURE_PROXY_SSL_HEADER = ('HTTP_X_FORWARDED_PROTO', 'https')


LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = True

USE_L10N = True

USE_TZ = True


# Static files (CSS, JavaScript, Images)
STATIC_ROOT = 'staticfiles'
STATIC_URL = '/static/'


# Logging

STCS_LOG_LEVEL = os.getenv('STCS_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s'
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'stcsim': {
            'handlers': ['console'],
            'level': STCS_LOG_LEVEL,
            'propagate': False,
        },
    },
}


# Simulation defaults

# number of worker processes used for trial-level parallelism
STCS_WORKERS = int(os.getenv('STCS_WORKERS', '1'))

# number of experiments per page in the results API
STCS_RESULTS_PAGE_SIZE = int(os.getenv('STCS_RESULTS_PAGE_SIZE', '50'))

STCS_DEFAULTS = {
    'max_iters': 50,
    'stop_tol': 1e-6,
    # None: per algorithm, see stcsim.harness.config.DEFAULT_DAMPING
    'damping': None,
    'v_min': 1e-13,
    'v_max': 1e13,
    'epsilon': 1e-3,
    'se_trials': 200,
    'se_tol': 1e-6,
    'se_max_iter': 100,
    # max. per-iteration time ratio when doubling N
    'bench_scaling_limit': 2.6,
}
