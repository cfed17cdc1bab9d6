"""HTTP-доступ к расчёту DoF и асинхронной верификации схемы."""
import logging

from celery.result import AsyncResult
from rest_framework import status
from rest_framework.permissions import AllowAny
from rest_framework.response import Response
from rest_framework.views import APIView

from dof.serializers import SystemParamsSerializer, VerifyRequestSerializer
from dof.services.allocation import plan_allocation, spatial_extension_factor
from dof.services.params import derive, scale
from dof.services.verification import TrialOptions
from dof.tasks import verify_task

logger = logging.getLogger(__name__)


class DofView(APIView):
    """
    GET /api/v1/dof/?mt=2&mr=4&d0=2&d1=1&d2=1
    Точное dbar, режим, p, связывающий член, q и план распределения символов.
    """
    permission_classes = [AllowAny]

    def get(self, request):
        serializer = SystemParamsSerializer(data=request.query_params)
        serializer.is_valid(raise_exception=True)
        params = serializer.validated_data['params']

        derived = derive(params)
        q = spatial_extension_factor(derived)
        scaled = scale(params, q)
        working = scaled.reciprocal() if scaled.mt > scaled.mr else scaled
        data = derived.to_dict()
        data['q'] = q
        data['scaled_params'] = scaled.to_dict()
        data['allocation'] = plan_allocation(derive(working)).to_dict()
        return Response(data)


class VerifyView(APIView):
    """
    POST /api/v1/verify/
    Ставит Монте-Карло верификацию в очередь, статус - через TaskStatusView.
    """
    permission_classes = [AllowAny]

    def post(self, request):
        serializer = VerifyRequestSerializer(data=request.data)
        serializer.is_valid(raise_exception=True)
        data = serializer.validated_data

        options = TrialOptions(provenance=data['provenance'], delta=data['delta'], snr_db=data['snr_db'])
        task = verify_task.delay(
            params=data['params'].to_dict(), trials=data['trials'], seed=data['seed'], options=options.to_dict(),
        )
        logger.info(f'verification of {data["params"].as_tuple()} queued as {task.id}')
        return Response(data={'task_id': task.id}, status=status.HTTP_202_ACCEPTED)


class TaskStatusView(APIView):
    permission_classes = [AllowAny]

    def get(self, request, task_id):
        """
        Статус задачи Celery по task_id.

        Возвращает:
        - task_id: ID задачи
        - status: PENDING | PROGRESS | SUCCESS | FAILURE | RETRY
        - progress: информация о прогрессе (для PROGRESS)
        - result: отчёт верификации (для SUCCESS и FAILURE)
        """
        task_result = AsyncResult(task_id)
        task_status = task_result.status

        response_data = {
            'task_id': task_id,
            'status': task_status,
        }

        if task_status == 'PROGRESS':
            meta = task_result.info or {}
            response_data['progress'] = {
                'stage': meta.get('stage', 'unknown'),
                'percent': meta.get('progress', 0),
                'trials_done': meta.get('trials_done'),
            }
            response_data['result'] = None

        elif task_status == 'SUCCESS':
            response_data['result'] = task_result.result

        elif task_status == 'FAILURE':
            error_info = task_result.info
            if isinstance(error_info, Exception):
                response_data['result'] = {
                    'success': False,
                    'error': str(error_info),
                    'error_type': type(error_info).__name__
                }
            else:
                response_data['result'] = error_info

        elif task_status == 'RETRY':
            response_data['result'] = None
            response_data['message'] = 'Task is being retried'

        elif task_status == 'PENDING':
            # в очереди или не существует
            response_data['result'] = None

        else:
            response_data['result'] = task_result.info

        return Response(response_data)
