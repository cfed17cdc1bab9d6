from django.conf import settings
from rest_framework import serializers

from dof.constants import PROVENANCES
from dof.exceptions import InvalidInputError
from dof.services.params import SystemParams


class SystemParamsSerializer(serializers.Serializer):
    mt = serializers.IntegerField(min_value=1)
    mr = serializers.IntegerField(min_value=1)
    d0 = serializers.IntegerField(min_value=0)
    d1 = serializers.IntegerField(min_value=0)
    d2 = serializers.IntegerField(min_value=0)

    def validate(self, attrs):
        # границы рангов проверяет сама SystemParams
        try:
            attrs['params'] = SystemParams.from_dict(attrs)
        except InvalidInputError as e:
            raise serializers.ValidationError(str(e))
        return attrs


class VerifyRequestSerializer(SystemParamsSerializer):
    trials = serializers.IntegerField(min_value=1, default=10)
    seed = serializers.IntegerField(min_value=0, required=False)
    provenance = serializers.ChoiceField(choices=list(PROVENANCES), default=PROVENANCES[0])
    delta = serializers.FloatField(min_value=1e-6, required=False)
    snr_db = serializers.FloatField(required=False, allow_null=True, default=None)

    def validate_trials(self, value):
        if value > settings.DOF_MAX_TRIALS:
            raise serializers.ValidationError(f'at most {settings.DOF_MAX_TRIALS} trials per request')
        return value

    def validate(self, attrs):
        attrs = super().validate(attrs)
        attrs.setdefault('seed', settings.DOF_DEFAULT_SEED)
        attrs.setdefault('delta', settings.DOF_ULA_DELTA)
        return attrs
