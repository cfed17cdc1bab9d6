"""
Django settings for dof_api project.

Сервис считает DoF трёхпользовательского MIMO-канала с интерференцией
и проверяет схему, которая этот DoF достигает. Все параметры окружения
читаются из .env (python-dotenv).
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()
# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('SECRET_KEY', 'dof-api-insecure-dev-key')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = bool(int(os.environ.get("DJANGO_DEBUG", default=0)))
ALLOWED_HOSTS = os.environ.get("DJANGO_ALLOWED_HOSTS", "localhost,127.0.0.1,testserver").split(",")

# Application definition

INSTALLED_APPS = [
    'django.contrib.auth',
    'django.contrib.contenttypes',
    'rest_framework',
    'dof.apps.DofConfig',
]

REST_FRAMEWORK = {
    # Сервис вычислительный, пользователей нет
    'DEFAULT_AUTHENTICATION_CLASSES': [],
    'DEFAULT_PERMISSION_CLASSES': [
        'rest_framework.permissions.AllowAny',
    ],
    'UNAUTHENTICATED_USER': None,
    'DEFAULT_RENDERER_CLASSES': (
        'rest_framework.renderers.JSONRenderer',
    ),
    'DEFAULT_PARSER_CLASSES': (
        'rest_framework.parsers.JSONParser',
    ),
}

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
]

ROOT_URLCONF = 'dof_api.urls'

WSGI_APPLICATION = 'dof_api.wsgi.application'

# Database
# Моделей нет; база нужна только служебным приложениям Django.

DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': os.getenv('SQL_NAME', str(BASE_DIR / 'db.sqlite3')),
    },
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'Europe/Moscow'

USE_I18N = True

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

DOF_LOG_LEVEL = os.environ.get('DOF_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'handlers': {
        'console': {
            'level': 'DEBUG',
            'class': 'logging.StreamHandler',
            'formatter': 'detailed',
        },
    },
    'formatters': {
        'detailed': {
            'format': '{levelname} {asctime} {module} {message}',
            'style': '{',
        },
    },
    'loggers': {
        'django': {
            'handlers': ['console'],
            'level': 'INFO',
            'propagate': True,
        },
        '__main__': {
            'handlers': ['console'],
            'level': 'DEBUG',
            'propagate': False,
        },
        'dof': {
            'handlers': ['console'],
            'level': DOF_LOG_LEVEL,
            'propagate': False,
        },
    },
}

# ============================================================================
# Параметры расчётов
# ============================================================================

# seed по умолчанию для всех команд; флаг --seed имеет приоритет
DOF_DEFAULT_SEED = int(os.environ.get('DOF_DEFAULT_SEED', 0))
# шаг антенной решётки в длинах волн для ULA-модели
DOF_ULA_DELTA = float(os.environ.get('DOF_ULA_DELTA', 0.5))

# относительный порог "нулевого" блока эквивалентного канала
DOF_ZERO_BLOCK_TOL = float(os.environ.get('DOF_ZERO_BLOCK_TOL', 1e-9))
# относительный порог ранга для произведений матриц при проверке
DOF_RANK_TOL = float(os.environ.get('DOF_RANK_TOL', 1e-9))
# допустимая ошибка восстановления символа без шума
DOF_DECODE_TOL = float(os.environ.get('DOF_DECODE_TOL', 1e-8))

# ограничение на число прогонов в одном запросе к API
DOF_MAX_TRIALS = int(os.environ.get('DOF_MAX_TRIALS', 10000))

# ============================================================================
# Celery
# ============================================================================

RABBITMQ_USER = os.environ.get('RABBITMQ_USER')
RABBITMQ_PASS = os.environ.get('RABBITMQ_PASS')
RABBITMQ_HOST_PORT = os.environ.get('RABBITMQ_HOST_PORT')
REDIS_HOST = os.environ.get('REDIS_HOST')

if RABBITMQ_HOST_PORT:
    CELERY_BROKER_URL = f'amqp://{RABBITMQ_USER}:{RABBITMQ_PASS}@{RABBITMQ_HOST_PORT}//'
else:
    CELERY_BROKER_URL = 'memory://'
if REDIS_HOST:
    CELERY_RESULT_BACKEND = f'redis://{REDIS_HOST}:6379/0'
else:
    CELERY_RESULT_BACKEND = 'cache+memory://'
CELERY_RESULT_EXPIRES = 3600
CELERY_TASK_SOFT_TIME_LIMIT = 300
CELERY_TASK_TIME_LIMIT = 360
CELERY_ACCEPT_CONTENT = ['json']
CELERY_TASK_SERIALIZER = 'json'
CELERY_RESULT_SERIALIZER = 'json'
CELERY_TIMEZONE = TIME_ZONE
CELERY_TRACK_STARTED = True
# без брокера задачи выполняются в процессе, результат всё равно пишется в backend
CELERY_TASK_ALWAYS_EAGER = bool(int(os.environ.get('CELERY_TASK_ALWAYS_EAGER', 0 if RABBITMQ_HOST_PORT else 1)))
CELERY_TASK_STORE_EAGER_RESULT = True
