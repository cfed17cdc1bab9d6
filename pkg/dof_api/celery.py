from __future__ import absolute_import, unicode_literals
import os
from celery import Celery

# Устанавливаем переменную окружения для настройки Django
os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'dof_api.settings')

app = Celery('dof_api')

# Загружаем настройки из Django settings, используя префикс CELERY
app.config_from_object('django.conf:settings', namespace='CELERY')

# Задачи прогонов верификации лежат в dof.tasks
app.autodiscover_tasks()
