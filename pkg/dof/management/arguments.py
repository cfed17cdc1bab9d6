"""Общие аргументы management-команд."""
from django.conf import settings
from django.core.management.base import CommandError

from dof.constants import PROVENANCES
from dof.exceptions import InvalidInputError
from dof.services.params import SystemParams
from dof.services.verification import TrialOptions

USAGE_ERROR = 2
VERIFICATION_FAILED = 1


def add_params_arguments(parser, required: bool = True):
    for name, help_text in (
        ('mt', 'Число передающих антенн M_T'),
        ('mr', 'Число приёмных антенн M_R'),
        ('d0', 'Ранг прямых линий D_0'),
        ('d1', 'Ранг линий H_k(k+1), D_1'),
        ('d2', 'Ранг линий H_k(k-1), D_2'),
    ):
        parser.add_argument(f'--{name}', type=int, required=required, help=help_text)


def add_trial_arguments(parser):
    parser.add_argument('--seed', type=int, default=None, help='Seed генератора (по умолчанию DOF_DEFAULT_SEED)')
    parser.add_argument('--provenance', choices=PROVENANCES, default=PROVENANCES[0], help='Модель канала')
    parser.add_argument('--delta', type=float, default=None, help='Шаг ULA в длинах волн')
    parser.add_argument('--tol', type=float, default=None, help='Допуск нулевых блоков и утечки помех')
    parser.add_argument('--snr-db', type=float, default=None,
                        help='Дополнительный прогон с шумом, в решение pass/fail не входит')


def params_from_options(options) -> SystemParams:
    try:
        return SystemParams(*(options[name] for name in ('mt', 'mr', 'd0', 'd1', 'd2')))
    except InvalidInputError as e:
        raise CommandError(str(e), returncode=USAGE_ERROR)


def seed_from_options(options) -> int:
    seed = options.get('seed')
    if seed is None:
        return settings.DOF_DEFAULT_SEED
    if seed < 0:
        raise CommandError(f'seed must be non-negative, got {seed}', returncode=USAGE_ERROR)
    return seed


def trial_options_from(options) -> TrialOptions:
    delta = options.get('delta')
    if delta is None:
        delta = settings.DOF_ULA_DELTA
    if not delta > 0:
        raise CommandError(f'delta must be positive, got {delta}', returncode=USAGE_ERROR)
    tol = options.get('tol')
    zero_tol = settings.DOF_ZERO_BLOCK_TOL if tol is None else tol
    return TrialOptions(
        provenance=options.get('provenance') or PROVENANCES[0],
        delta=delta,
        zero_tol=zero_tol,
        rank_tol=settings.DOF_RANK_TOL,
        decode_tol=settings.DOF_DECODE_TOL,
        snr_db=options.get('snr_db'),
    )


def write_report(command, report, as_json: bool):
    """Печатает отчёт и превращает провал в код выхода 1."""
    if as_json:
        command.stdout.write(report.to_json(indent=2))
    else:
        data = report.to_dict()
        command.stdout.write(
            f"{data['params']} q={data['q']} branch={data['branch']} dbar={data['dbar']} "
            f"streams/user={data['streams_per_user']}"
        )
        for receiver in data['receivers']:
            command.stdout.write(
                f"  rx {receiver['receiver']}: Z={receiver['z_measured']} predicted={receiver['z_predicted']} "
                f"decodable={receiver['decodable']} max_error={receiver['max_symbol_error']:.2e}"
            )
        if report.passed:
            command.stdout.write(command.style.SUCCESS(f'{report.passed_trials}/{report.trials} trials passed'))
        else:
            command.stdout.write(command.style.ERROR(
                f'{report.passed_trials}/{report.trials} trials passed, errors: {", ".join(sorted(report.errors))}'
            ))
    if not report.passed:
        raise CommandError('verification failed', returncode=VERIFICATION_FAILED)
