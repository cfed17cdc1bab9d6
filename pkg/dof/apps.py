from django.apps import AppConfig


class DofConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'dof'
    verbose_name = 'Degrees of freedom of the rank-deficient MIMO interference channel'
