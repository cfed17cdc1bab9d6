import logging
from typing import List, Sequence, Tuple

from celery import group, shared_task

from dof.exceptions import DofError
from dof.services.params import SystemParams
from dof.services.verification import TrialOptions, TrialResult, monte_carlo, run_trial

logger = logging.getLogger(__name__)


# celery -A dof_api worker --loglevel=info
@shared_task
def run_trial_task(params: dict, seed: int, index: int, options: dict) -> dict:
    """Один прогон Монте-Карло. Аргументы и результат - JSON-совместимые словари."""
    result = run_trial(SystemParams.from_dict(params), seed, index, TrialOptions.from_dict(options))
    return result.to_dict()


def celery_runner(params: SystemParams, jobs: Sequence[Tuple[int, int]], options: TrialOptions) -> List[TrialResult]:
    """Раздаёт прогоны воркерам группой задач и ждёт все результаты."""
    job = group(run_trial_task.s(params.to_dict(), seed, index, options.to_dict()) for index, seed in jobs)
    results = job.apply_async().get(disable_sync_subtasks=False)
    return [TrialResult.from_dict(data) for data in results]


@shared_task(bind=True)
def verify_task(self, params: dict, trials: int, seed: int, options: dict):
    """
    Асинхронная верификация для HTTP API.

    Возвращает отчёт VerificationReport.to_dict() с полем success.
    Ход выполнения публикуется как PROGRESS с полями stage, progress, trials_done.
    """
    logger.info(f'verify_task {self.request.id}: {params}, {trials} trials, seed {seed}')

    def publish(done: int, total: int):
        self.update_state(
            state='PROGRESS',
            meta={'stage': 'trials', 'progress': int(100 * done / total), 'trials_done': done},
        )

    try:
        self.update_state(state='PROGRESS', meta={'stage': 'starting', 'progress': 0, 'trials_done': 0})

        trial_options = TrialOptions.from_dict(options)
        report = monte_carlo(
            SystemParams.from_dict(params), trials, seed, trial_options.provenance, trial_options, progress=publish,
        )

        result = report.to_dict()
        result['success'] = report.passed
        logger.info(f'verify_task {self.request.id}: {report.passed_trials}/{report.trials} trials passed')
        return result

    except DofError as e:
        logger.error(f'verification of {params} failed: {e}', exc_info=True)
        return {'success': False, 'error': str(e), 'error_type': type(e).__name__}
