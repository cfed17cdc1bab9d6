from django.core.management.base import BaseCommand, CommandError

from dof.exceptions import InvalidInputError
from dof.management.arguments import USAGE_ERROR
from dof.services.sweep import DEFAULT_DT_LIST, parse_dt_list, sweep_rows, write_csv


class Command(BaseCommand):
    help = 'CSV с кривыми dbar/N от M/N для набора D_t при D_0 = M'
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('--n', type=int, default=12, help='Число приёмных антенн N')
        parser.add_argument('--grid', type=int, default=24, help='Число точек по M/N')
        parser.add_argument('--dt-list', type=str, default=DEFAULT_DT_LIST,
                            help='Список D_t через запятую: выражения от M и N, например 0,M/2,N-M,2')
        parser.add_argument('--out', type=str, default='-', help='Путь к CSV, "-" для stdout')

    def handle(self, *args, **options):
        try:
            specs = parse_dt_list(options['dt_list'])
            rows = sweep_rows(options['n'], options['grid'], specs)
        except InvalidInputError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)

        out = options['out']
        if out == '-':
            write_csv(rows, self.stdout)
            return
        try:
            with open(out, 'w', encoding='utf-8', newline='') as f:
                count = write_csv(rows, f)
        except OSError as e:
            raise CommandError(f'cannot write {out}: {e}', returncode=USAGE_ERROR)
        self.stderr.write(self.style.SUCCESS(f'{count} rows written to {out}'))
