from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from dof.exceptions import InvalidInputError
from dof.management.arguments import USAGE_ERROR, seed_from_options, write_report
from dof.services.channels import worked_example_channels
from dof.services.verification import TrialOptions, verify_channels


class Command(BaseCommand):
    help = 'Опубликованный пример: M_T=2, M_R=4, ULA с фиксированными углами, 2 потока на пользователя'
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--delta', type=float, default=None, help='Шаг ULA в длинах волн')
        parser.add_argument('--seed', type=int, default=None, help='Seed для случайных частей схемы')
        parser.add_argument('--json', action='store_true', help='Вывести отчёт в JSON')

    def handle(self, *args, **options):
        delta = options['delta'] if options['delta'] is not None else settings.DOF_ULA_DELTA
        seed = seed_from_options(options)
        try:
            cs = worked_example_channels(delta)
        except InvalidInputError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)

        report = verify_channels(cs, seed, TrialOptions(
            provenance=cs.provenance.kind, delta=delta,
            zero_tol=settings.DOF_ZERO_BLOCK_TOL, rank_tol=settings.DOF_RANK_TOL,
            decode_tol=settings.DOF_DECODE_TOL,
        ))
        if not options['json']:
            for receiver in report.receivers:
                free = sorted(cs.params.mr - z for z in receiver.z_measured)
                self.stdout.write(f'rx {receiver.receiver}: interference-free receive dimensions {free}')
        write_report(self, report, options['json'])
