"""
URL configuration for dof_api project.

Весь HTTP-интерфейс живёт в приложении dof под префиксом api/v1/.
"""
from django.urls import path, include

urlpatterns = [
    path('api/v1/', include('dof.urls'))
]
