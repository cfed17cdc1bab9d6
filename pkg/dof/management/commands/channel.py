from django.core.management.base import BaseCommand, CommandError

from dof.exceptions import DofError, InvalidInputError
from dof.management.arguments import USAGE_ERROR, add_params_arguments, add_trial_arguments, params_from_options, \
    seed_from_options, trial_options_from, write_report
from dof.services.allocation import spatial_extension_factor
from dof.services.channels import ChannelSet, generate
from dof.services.params import derive, scale
from dof.services.verification import verify_channels


class Command(BaseCommand):
    help = 'Экспорт сгенерированного набора каналов в JSON и импорт с проверкой схемы'
    requires_system_checks = []

    def add_arguments(self, parser):
        parser.add_argument('action', choices=('export', 'import'), help='export или import')
        parser.add_argument('path', type=str, help='Путь к JSON-файлу каналов')
        add_params_arguments(parser, required=False)
        add_trial_arguments(parser)
        parser.add_argument('--extend', action='store_true',
                            help='При экспорте сразу применить пространственное расширение q')
        parser.add_argument('--verify', action='store_true', help='При импорте прогнать схему на каналах файла')
        parser.add_argument('--json', action='store_true', help='Вывести отчёт в JSON')

    def handle(self, *args, **options):
        if options['action'] == 'export':
            self.export(options)
        else:
            self.import_(options)

    def export(self, options):
        if any(options[name] is None for name in ('mt', 'mr', 'd0', 'd1', 'd2')):
            raise CommandError('export needs --mt --mr --d0 --d1 --d2', returncode=USAGE_ERROR)
        params = params_from_options(options)
        if options['extend']:
            params = scale(params, spatial_extension_factor(derive(params)))
        seed = seed_from_options(options)
        trial_options = trial_options_from(options)
        cs = generate(params, trial_options.provenance, seed, trial_options.delta)
        path = options['path']
        try:
            with open(path, 'w', encoding='utf-8') as f:
                f.write(cs.to_json(indent=2))
        except OSError as e:
            raise CommandError(f'cannot write {path}: {e}', returncode=USAGE_ERROR)
        self.stdout.write(self.style.SUCCESS(f'Каналы {params.as_tuple()} ({cs.provenance.kind}) сохранены в {path}'))

    def import_(self, options):
        path = options['path']
        try:
            with open(path, 'r', encoding='utf-8') as f:
                cs = ChannelSet.from_json(f.read())
        except FileNotFoundError:
            raise CommandError(f"File '{path}' does not exist", returncode=USAGE_ERROR)
        except InvalidInputError as e:
            raise CommandError(f'invalid channel file {path}: {e}', returncode=USAGE_ERROR)

        mismatches = cs.rank_mismatches()
        self.stdout.write(f'Каналы {cs.params.as_tuple()} ({cs.provenance.kind}, seed {cs.provenance.seed})')
        for k, i, expected, measured in mismatches:
            self.stdout.write(self.style.WARNING(f'  H[{k}][{i}]: rank {measured}, expected {expected}'))

        if not options['verify']:
            return
        seed = seed_from_options(options)
        trial_options = trial_options_from(options)
        trial_options.provenance = cs.provenance.kind
        try:
            report = verify_channels(cs, seed, trial_options)
        except DofError as e:
            raise CommandError(str(e), returncode=USAGE_ERROR)
        write_report(self, report, options['json'])
