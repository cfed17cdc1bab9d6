import json

from django.core.management.base import BaseCommand

from dof import __version__
from dof.management.arguments import add_params_arguments, params_from_options
from dof.services.allocation import spatial_extension_factor
from dof.services.params import derive


class Command(BaseCommand):
    help = 'Точное значение DoF на пользователя для кортежа (M_T, M_R, D_0, D_1, D_2)'
    requires_system_checks = []

    def add_arguments(self, parser):
        add_params_arguments(parser)
        parser.add_argument('--json', action='store_true', help='Вывести один JSON-объект')

    def handle(self, *args, **options):
        params = params_from_options(options)
        derived = derive(params)
        q = spatial_extension_factor(derived)
        data = derived.to_dict()
        data['q'] = q
        data['version'] = __version__

        if options['json']:
            self.stdout.write(json.dumps(data))
            return

        self.stdout.write(f"params: {params.as_tuple()}")
        self.stdout.write(self.style.SUCCESS(f"dbar = {data['dbar']} ({data['dbar_decimal']})"))
        self.stdout.write(f"regime: {data['regime']}, p: {data['p']}, binding: {data['binding']}, q: {q}")
