from django.urls import path

from .views import DofView, TaskStatusView, VerifyView

app_name = 'dof'

urlpatterns = [
    path('dof/', DofView.as_view(), name='dof'),
    path('verify/', VerifyView.as_view(), name='verify'),
    path('tasks/<str:task_id>/', TaskStatusView.as_view(), name='task-status'),
]
