"""
Django settings for the sph_packing project.

Only the pieces the particle-generation toolkit uses are configured: the
``core`` app (management commands and services), Django REST framework for
config validation, and logging.
"""

from pathlib import Path
import os
import environ

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Initialize environment variables
env = environ.Env(
    DEBUG=(bool, False)
)

# Read .env file (can be disabled via USE_DOTENV=0 or during pytest)
if os.environ.get('USE_DOTENV', '1') == '1' and not os.environ.get('PYTEST_CURRENT_TEST'):
    environ.Env.read_env(BASE_DIR / '.env')

SECRET_KEY = env('SECRET_KEY', default='sph-packing-local-key')

DEBUG = env('DEBUG')

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "rest_framework",
    "core",
]

# Only DRF serializers are used; no views, so no authentication apps.
REST_FRAMEWORK = {
    "DEFAULT_AUTHENTICATION_CLASSES": [],
    "DEFAULT_PERMISSION_CLASSES": [],
    "UNAUTHENTICATED_USER": None,
}

# The toolkit persists nothing in a database; runs read and write plain files.
DATABASES = {}

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

USE_TZ = True

TIME_ZONE = "UTC"


# Relaxation defaults shared by the config parser and the services.
# Values are the physical defaults of the method, not deployment knobs.
SPH_PACKING = {
    'SOLID_SMOOTHING_RATIO': 1.05,
    'FLUID_SMOOTHING_RATIO': 1.3,
    'HEAVISIDE_RATIO': 0.75,
    'CFL': 0.25,
    'MAX_STEPS': 10000,
    'CONVERGENCE_THRESHOLD': 1e-4,
    'BACKGROUND_PRESSURE': 1.0,
    'REFERENCE_DENSITY': 1.0,
    'LOG_EVERY': 100,
    'OUTPUT_FORMATS': ['csv', 'vtk'],
}


# Logging Configuration
LOG_LEVEL = env('LOG_LEVEL', default='INFO')
LOG_FILE = env('LOG_FILE', default='')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {module} {process:d} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'WARNING',
            'propagate': False,
        },
        'core': {
            'handlers': [],
            'level': LOG_LEVEL,
            'propagate': True,
        },
    },
}

if LOG_FILE:
    LOGGING['handlers']['file'] = {
        'level': 'INFO',
        'class': 'logging.FileHandler',
        'filename': LOG_FILE,
        'formatter': 'verbose',
    }
    LOGGING['loggers']['core']['handlers'].append('file')
