"""
Validation of run-configuration sections.

The config parser hands each section to one of these serializers as a
dict of raw strings; ``validated_data`` comes back typed with defaults
from ``settings.SPH_PACKING`` filled in.
"""

import math
import re

from django.conf import settings
from rest_framework import serializers

SHAPE_KINDS = ('box', 'circle', 'sphere', 'polygon', 'stl')
RELAXATION_MODES = ('complex', 'separate', 'separate-no-boolean')
OUTPUT_FORMATS = ('csv', 'vtk')

# Keys each shape kind needs; every other shape key must be absent
SHAPE_KEYS = {
    'box': ('min', 'max'),
    'circle': ('center', 'radius'),
    'sphere': ('center', 'radius'),
    'polygon': ('file',),
    'stl': ('file',),
}
SHAPE_DIMENSION = {'circle': 2, 'sphere': 3, 'polygon': 2, 'stl': 3}

DEFAULTS = settings.SPH_PACKING


class FiniteFloatField(serializers.FloatField):
    default_error_messages = {'not_finite': 'A finite number is required.'}

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if not math.isfinite(value):
            self.fail('not_finite')
        return value


class PositiveFloatField(FiniteFloatField):
    default_error_messages = {'not_positive': 'Must be greater than zero.'}

    def to_internal_value(self, data):
        value = super().to_internal_value(data)
        if value <= 0:
            self.fail('not_positive')
        return value


class CoordinateField(serializers.Field):
    """A 2D or 3D point written as comma-separated numbers, e.g. ``0.5, 0.5``."""

    default_error_messages = {
        'invalid': 'Expected 2 or 3 comma-separated numbers.',
        'not_finite': 'Coordinates must be finite.',
    }

    def to_internal_value(self, data):
        if isinstance(data, str):
            parts = [part for part in re.split(r'[,\s]+', data.strip()) if part]
        else:
            parts = list(data)
        if len(parts) not in (2, 3):
            self.fail('invalid')
        try:
            values = tuple(float(part) for part in parts)
        except (TypeError, ValueError):
            self.fail('invalid')
        if not all(math.isfinite(v) for v in values):
            self.fail('not_finite')
        return values

    def to_representation(self, value):
        return ', '.join(repr(float(v)) for v in value)


class ShapeSerializer(serializers.Serializer):
    shape = serializers.ChoiceField(choices=SHAPE_KINDS)
    min = CoordinateField(required=False)
    max = CoordinateField(required=False)
    center = CoordinateField(required=False)
    radius = PositiveFloatField(required=False)
    file = serializers.CharField(required=False)

    def validate(self, attrs):
        kind = attrs['shape']
        needed = SHAPE_KEYS[kind]
        for key in needed:
            if key not in attrs:
                raise serializers.ValidationError({key: f"Required for shape '{kind}'."})
        for key in ('min', 'max', 'center', 'radius', 'file'):
            if key in attrs and key not in needed:
                raise serializers.ValidationError({key: f"Not used by shape '{kind}'."})

        if kind == 'box':
            if len(attrs['min']) != len(attrs['max']):
                raise serializers.ValidationError({'max': 'Must have as many coordinates as min.'})
            if any(hi <= lo for lo, hi in zip(attrs['min'], attrs['max'])):
                raise serializers.ValidationError({'max': 'Must exceed min on every axis.'})
        if 'center' in attrs and len(attrs['center']) != SHAPE_DIMENSION[kind]:
            raise serializers.ValidationError(
                {'center': f"Shape '{kind}' needs a {SHAPE_DIMENSION[kind]}D center."}
            )
        return attrs


class BodySerializer(ShapeSerializer):
    pressure = PositiveFloatField(required=False)


class DiscretizationSerializer(serializers.Serializer):
    dx = PositiveFloatField()
    level_set_spacing = PositiveFloatField(required=False)
    solid_smoothing_ratio = PositiveFloatField(default=DEFAULTS['SOLID_SMOOTHING_RATIO'])
    fluid_smoothing_ratio = PositiveFloatField(default=DEFAULTS['FLUID_SMOOTHING_RATIO'])
    heaviside_ratio = PositiveFloatField(default=DEFAULTS['HEAVISIDE_RATIO'])
    reference_density = PositiveFloatField(default=DEFAULTS['REFERENCE_DENSITY'])

    def validate(self, attrs):
        attrs.setdefault('level_set_spacing', attrs['dx'] / 2.0)
        return attrs


class RelaxationSerializer(serializers.Serializer):
    mode = serializers.ChoiceField(choices=RELAXATION_MODES, default='complex')
    cfl = PositiveFloatField(default=DEFAULTS['CFL'])
    max_steps = serializers.IntegerField(min_value=1, default=DEFAULTS['MAX_STEPS'])
    convergence_threshold = PositiveFloatField(default=DEFAULTS['CONVERGENCE_THRESHOLD'])
    fluid_pressure = PositiveFloatField(default=DEFAULTS['BACKGROUND_PRESSURE'])
    log_every = serializers.IntegerField(min_value=1, default=DEFAULTS['LOG_EVERY'])

    def validate_cfl(self, value):
        if value > 0.25:
            raise serializers.ValidationError("CFL factor must not exceed 0.25.")
        return value


class OutputSerializer(serializers.Serializer):
    directory = serializers.CharField(default='output')
    formats = serializers.CharField(default=', '.join(DEFAULTS['OUTPUT_FORMATS']))

    def validate_formats(self, value):
        formats = tuple(dict.fromkeys(part for part in re.split(r'[,\s]+', value.strip()) if part))
        if not formats:
            raise serializers.ValidationError("At least one output format is required.")
        unknown = [fmt for fmt in formats if fmt not in OUTPUT_FORMATS]
        if unknown:
            raise serializers.ValidationError(
                f"Unknown format(s) {', '.join(unknown)}; expected {', '.join(OUTPUT_FORMATS)}."
            )
        return formats
