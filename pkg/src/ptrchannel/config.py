"""Run configuration: strict JSON schema plus command-line overrides.

Schema (every key optional; unknown keys are rejected)::

    {
      "environment": "urban" | {"name": ..., "base": "urban", "alpha": ...,
                                "beta": ..., "gamma": ...,
                                "gr_logistic": {"a":, "b":, "c":, "d":, "e":}},
      "frequency_hz": 4e9,
      "altitudes_m": [100],
      "dist_m": "1:300:1"  or  [1, 300, 1],
      "realizations": 1,
      "seed": 0,
      "polarization": "horizontal" | "vertical",
      "eps_building": 4.44,
      "eps_ground": 3.0,
      "p_g": null,
      "h_b_m": null,
      "theta_deg": [10, 20, ...],
      "links_per_city": 1000,
      "side_d_km": null,
      "placement": "trajectory" | "random",
      "workers": 1,
      "flags": {"paper_literal_fresnel": false, "exact_amplitude": false,
                "stochastic_hb": false, "linear_power_averaging": false},
      "out": null,
      "format": "csv" | "json"
    }

A custom environment block may name a preset as ``base`` and override
only some of its fields.
"""

import json
import math
from dataclasses import asdict, dataclass, field, fields, replace

from .city import EnvironmentParams, GRLogistic, get_preset
from .errors import ConfigError, DomainError
from .propagation import ModelOptions, Polarization

FLAG_NAMES = ('paper_literal_fresnel', 'exact_amplitude', 'stochastic_hb',
              'linear_power_averaging')
DEFAULT_THETAS = (5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 89.0)


@dataclass(frozen=True)
class RunConfig:
    environment: object = 'urban'
    frequency_hz: float = 4.0e9
    altitudes_m: tuple = None
    dist_m: tuple = (1.0, 300.0, 1.0)
    realizations: int = 1
    seed: int = 0
    polarization: str = 'horizontal'
    eps_building: float = 4.44
    eps_ground: float = 3.0
    p_g: float = None
    h_b_m: float = None
    theta_deg: tuple = DEFAULT_THETAS
    links_per_city: int = 1000
    side_d_km: float = None
    placement: str = 'trajectory'
    workers: int = 1
    flags: dict = field(default_factory=lambda: {k: False for k in FLAG_NAMES})
    out: str = None
    format: str = 'csv'

    def __post_init__(self):
        object.__setattr__(self, 'flags', _parse_flags(self.flags))
        object.__setattr__(self, 'dist_m', parse_range(self.dist_m))
        if self.altitudes_m is not None:
            object.__setattr__(self, 'altitudes_m',
                               _float_list(self.altitudes_m, 'altitudes_m'))
        object.__setattr__(self, 'theta_deg',
                           _float_list(self.theta_deg, 'theta_deg'))
        self.validate()

    # -- validation --------------------------------------------------------

    def validate(self):
        _positive(self.frequency_hz, 'frequency_hz')
        for h in self.altitudes_m or ():
            _positive(h, 'altitudes_m')
        _integer(self.realizations, 'realizations', minimum=1)
        _integer(self.seed, 'seed', minimum=0)
        _integer(self.links_per_city, 'links_per_city', minimum=1)
        _integer(self.workers, 'workers', minimum=1)
        try:
            Polarization.parse(self.polarization)
        except DomainError as exc:
            raise ConfigError(str(exc), field='polarization') from None
        for name in ('eps_building', 'eps_ground'):
            v = getattr(self, name)
            if not (_is_number(v) and v > 1):
                raise ConfigError(f'{name} must exceed 1', field=name)
        if self.p_g is not None and not (_is_number(self.p_g)
                                         and 0 <= self.p_g <= 1):
            raise ConfigError('p_g must lie in [0, 1]', field='p_g')
        if self.h_b_m is not None and not (_is_number(self.h_b_m)
                                           and self.h_b_m >= 0):
            raise ConfigError('h_b_m must be non-negative', field='h_b_m')
        for t in self.theta_deg:
            if not 0 < t < 90:
                raise ConfigError('theta_deg values must lie in (0, 90)',
                                  field='theta_deg')
        if self.side_d_km is not None:
            _positive(self.side_d_km, 'side_d_km')
        if self.placement not in ('trajectory', 'random'):
            raise ConfigError("placement must be 'trajectory' or 'random'",
                              field='placement')
        if self.format not in ('csv', 'json'):
            raise ConfigError("format must be 'csv' or 'json'", field='format')
        self.env       # resolves and validates the environment block

    # -- derived views -----------------------------------------------------

    @property
    def env(self):
        return parse_environment(self.environment)

    @property
    def options(self):
        return ModelOptions(
            paper_literal_fresnel=self.flags['paper_literal_fresnel'],
            exact_amplitude=self.flags['exact_amplitude'],
            stochastic_hb=self.flags['stochastic_hb'])

    @property
    def pol(self):
        return Polarization.parse(self.polarization)

    def provenance(self, **extra):
        """Resolved settings that determine the output, for hashing.

        Output location and worker count are excluded: neither changes
        the numbers written.
        """
        doc = asdict(self)
        doc.pop('out')
        doc.pop('workers')
        doc['environment'] = self.env.to_dict()
        doc.update(extra)
        return doc

    def with_overrides(self, **changes):
        changes = {k: v for k, v in changes.items() if v is not None}
        flags = dict(self.flags)
        for name in FLAG_NAMES:
            if changes.pop(name, False):
                flags[name] = True
        return replace(self, flags=flags, **changes)

    # -- loading -----------------------------------------------------------

    @classmethod
    def from_dict(cls, doc):
        if not isinstance(doc, dict):
            raise ConfigError('configuration must be a JSON object')
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise ConfigError(f'unknown configuration field(s): {unknown}',
                              field=unknown[0])
        return cls(**doc)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding='utf-8') as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f'cannot read config {path}: {exc}',
                              field='config') from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f'config {path} is not valid JSON: {exc}',
                              field='config') from None
        return cls.from_dict(doc)


def parse_range(value):
    """``'MIN:MAX:STEP'`` or a 3-sequence into a float triple."""
    if isinstance(value, str):
        parts = value.split(':')
    else:
        parts = list(value)
    try:
        lo, hi, step = (float(p) for p in parts)
    except (TypeError, ValueError):
        raise ConfigError('distance range must be MIN:MAX:STEP',
                          field='dist_m') from None
    if not (lo > 0 and hi >= lo and step > 0):
        raise ConfigError('distance range needs 0 < MIN <= MAX and STEP > 0',
                          field='dist_m')
    return (lo, hi, step)


def parse_environment(value):
    if isinstance(value, EnvironmentParams):
        return value
    if isinstance(value, str):
        return get_preset(value)
    if not isinstance(value, dict):
        raise ConfigError('environment must be a preset name or an object',
                          field='environment')
    allowed = {'name', 'base', 'alpha', 'beta', 'gamma', 'gr_logistic'}
    unknown = sorted(set(value) - allowed)
    if unknown:
        raise ConfigError(f'unknown environment field(s): {unknown}',
                          field='environment.' + unknown[0])
    base = get_preset(value['base']) if 'base' in value else None
    merged = base.to_dict() if base else {}
    merged.update({k: v for k, v in value.items() if k != 'base'})
    missing = sorted({'alpha', 'beta', 'gamma', 'gr_logistic'} - set(merged))
    if missing:
        raise ConfigError(f'environment block lacks {missing}',
                          field='environment.' + missing[0])
    gl = merged['gr_logistic']
    if isinstance(gl, dict):
        extra = sorted(set(gl) - set(GRLogistic._fields))
        if extra:
            raise ConfigError(f'unknown logistic constant(s): {extra}',
                              field='environment.gr_logistic')
        if base:
            gl = {**base.gr_logistic._asdict(), **gl}
        try:
            gl = GRLogistic(**{k: float(gl[k]) for k in GRLogistic._fields})
        except KeyError as exc:
            raise ConfigError(f'logistic constant {exc} missing',
                              field='environment.gr_logistic') from None
    try:
        return EnvironmentParams(
            str(merged.get('name', 'custom')), float(merged['alpha']),
            float(merged['beta']), float(merged['gamma']), GRLogistic(*gl))
    except (DomainError, TypeError, ValueError) as exc:
        raise ConfigError(f'invalid environment: {exc}',
                          field='environment') from None


def _parse_flags(value):
    if value is None:
        value = {}
    if not isinstance(value, dict):
        raise ConfigError('flags must be an object', field='flags')
    unknown = sorted(set(value) - set(FLAG_NAMES))
    if unknown:
        raise ConfigError(f'unknown flag(s): {unknown}',
                          field='flags.' + unknown[0])
    out = {k: False for k in FLAG_NAMES}
    for k, v in value.items():
        if not isinstance(v, bool):
            raise ConfigError(f'flag {k} must be true or false',
                              field='flags.' + k)
        out[k] = v
    return out


def _float_list(value, name):
    if isinstance(value, (int, float)):
        value = [value]
    elif isinstance(value, str):
        value = [v for v in value.split(',') if v.strip()]
    try:
        out = tuple(float(v) for v in value)
    except (TypeError, ValueError):
        raise ConfigError(f'{name} must be a list of numbers',
                          field=name) from None
    if not out:
        raise ConfigError(f'{name} must not be empty', field=name)
    return out


def _is_number(v):
    return (isinstance(v, (int, float)) and not isinstance(v, bool)
            and math.isfinite(v))


def _positive(v, name):
    if not (_is_number(v) and v > 0):
        raise ConfigError(f'{name} must be a positive number', field=name)


def _integer(v, name, minimum):
    if not (isinstance(v, int) and not isinstance(v, bool) and v >= minimum):
        raise ConfigError(f'{name} must be an integer >= {minimum}',
                          field=name)
