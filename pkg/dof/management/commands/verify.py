from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from dof.management.arguments import USAGE_ERROR, add_params_arguments, add_trial_arguments, params_from_options, \
    seed_from_options, trial_options_from, write_report
from dof.services.verification import monte_carlo


class Command(BaseCommand):
    help = 'Монте-Карло проверка двухслойной схемы: построение, декодируемость, восстановление символов'
    requires_system_checks = []

    def add_arguments(self, parser):
        add_params_arguments(parser)
        add_trial_arguments(parser)
        parser.add_argument('--trials', type=int, default=20, help='Число независимых прогонов')
        parser.add_argument('--parallel', action='store_true', help='Раздать прогоны воркерам Celery')
        parser.add_argument('--json', action='store_true', help='Вывести отчёт в JSON')

    def handle(self, *args, **options):
        params = params_from_options(options)
        seed = seed_from_options(options)
        trials = options['trials']
        if not 1 <= trials <= settings.DOF_MAX_TRIALS:
            raise CommandError(f'trials must lie in [1, {settings.DOF_MAX_TRIALS}], got {trials}',
                               returncode=USAGE_ERROR)
        trial_options = trial_options_from(options)

        runner = None
        if options['parallel']:
            from dof.tasks import celery_runner
            runner = celery_runner

        report = monte_carlo(params, trials, seed, trial_options.provenance, trial_options, runner=runner)
        write_report(self, report, options['json'])
