""" Experiment configuration

A configuration file is line-oriented ``key = value`` text. Lines starting
with ``#`` are comments and the first key must be ``schema_version``::

    schema_version = 1
    algorithm = STCS_DS
    m = 52,103,154
    snr_db = 10,30
    trials = 200

Grids are comma-separated. Keys that are not given keep their defaults. """

import enum
import dataclasses
from dataclasses import dataclass

from stcsim.linops import SensingKind
from stcsim.chanmodel import ChannelGenSpec
from stcsim.engine import V_MIN, V_MAX, TurboConfig
from stcsim.ds import DsMode, DEFAULT_EPSILON
from stcsim.em import LambdaUpdate


SCHEMA_VERSION = 1


# Exceptions


class ConfigError(ValueError):
    """ Base class for configuration errors """


class UnknownKey(ConfigError):
    """ The configuration contains a key that is not part of the schema """


class SchemaVersionError(ConfigError):
    """ The schema version is missing or not supported """


class InvalidValue(ConfigError):
    """ A value can not be parsed or violates a constraint """


class Algorithm(enum.Enum):
    TURBO_CS = 'TURBO_CS'
    STCS_FS = 'STCS_FS'
    STCS_DS = 'STCS_DS'


# damping of the turbo iteration when the configuration gives none
DEFAULT_DAMPING = {
    Algorithm.TURBO_CS: 1.0,
    Algorithm.STCS_FS: 0.7,
    Algorithm.STCS_DS: 0.7,
}


class ChannelSource(enum.Enum):
    SYNTHETIC = 'SYNTHETIC'
    FILE = 'FILE'


def _grid(cast):
    def _parse(value):
        if isinstance(value, (list, tuple)):
            items = value
        else:
            items = [v for v in str(value).split(',') if v.strip()]
        return tuple(cast(str(v).strip()) for v in items)

    return _parse


def _bool(value):
    if isinstance(value, bool):
        return value

    value = str(value).strip().lower()
    if value in ('true', 'yes', 'on', '1'):
        return True
    if value in ('false', 'no', 'off', '0'):
        return False
    raise ValueError('not a boolean: ' + value)


def _optional(cast):
    def _parse(value):
        if value is None or str(value).strip() in ('', 'none'):
            return None
        return cast(value)

    return _parse


@dataclass(frozen=True)
class ExperimentConfig:
    schema_version: int = SCHEMA_VERSION
    algorithm: Algorithm = Algorithm.STCS_DS
    kind: SensingKind = SensingKind.DFT_RP
    n: int = 256
    p_taps: int = 32
    l_max: int = 16
    m: tuple = (103,)
    snr_db: tuple = (30.0,)
    trials: int = 1
    base_seed: int = 0
    em: bool = False
    source: ChannelSource = ChannelSource.SYNTHETIC
    channel_file: str = None
    ds_mode: DsMode = DsMode.EXACT
    p10: float = 1 / 240
    p01: float = 1 / 16
    gamma: float = 1.0
    epsilon: float = DEFAULT_EPSILON
    shared_operator: bool = True
    lambda_update: LambdaUpdate = LambdaUpdate.FIRST
    tied_sigma: bool = False
    max_iters: int = 50
    stop_tol: float = 1e-6
    damping: float = None
    v_min: float = V_MIN
    v_max: float = V_MAX
    se_trials: int = 200
    se_tol: float = 1e-6
    se_max_iter: int = 100
    bench_n: tuple = (256, 512, 1024)
    bench_p: tuple = (16, 32)
    bench_iters: int = 10

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            try:
                object.__setattr__(self, f.name, PARSERS[f.name](value))
            except (TypeError, ValueError) as e:
                raise InvalidValue(
                    '{key}: {value!r} is not valid ({msg})'.format(
                        key=f.name, value=value, msg=e
                    )
                ) from e

        if self.schema_version != SCHEMA_VERSION:
            raise SchemaVersionError(
                'unsupported schema version {v}, expected {expected}'.format(
                    v=self.schema_version, expected=SCHEMA_VERSION
                )
            )

        if not self.m or not self.snr_db:
            raise InvalidValue('the m and snr_db grids must not be empty')

        if any(not 0 < m <= self.n for m in self.m):
            raise InvalidValue('every m must be in (0, n]')

        if self.trials < 1:
            raise InvalidValue('trials must be at least 1')

        if not 0 <= self.l_max <= self.p_taps:
            raise InvalidValue('need 0 <= l_max <= p_taps')

        if self.source == ChannelSource.FILE and not self.channel_file:
            raise InvalidValue('a FILE channel source needs channel_file')

        if not self.shared_operator and self.algorithm == Algorithm.STCS_DS:
            raise InvalidValue(
                'STCS_DS needs one operator shared by all subcarriers'
            )

        if not self.bench_n or not self.bench_p:
            raise InvalidValue('the bench grids must not be empty')

        # raises on inconsistent channel or turbo parameters
        try:
            self.channel_spec()
            self.turbo_config()
        except ValueError as ve:
            raise InvalidValue(str(ve)) from ve

    def channel_spec(self, seed=None):
        return ChannelGenSpec(
            n=self.n,
            p_taps=self.p_taps,
            l_max=self.l_max,
            p10=self.p10,
            p01=self.p01,
            gamma=self.gamma,
            seed=self.base_seed if seed is None else seed,
        )

    @property
    def effective_damping(self):
        if self.damping is None:
            return DEFAULT_DAMPING[self.algorithm]
        return self.damping

    def turbo_config(self):
        return TurboConfig(
            max_iters=self.max_iters,
            stop_tol=self.stop_tol,
            damping=self.effective_damping,
            v_min=self.v_min,
            v_max=self.v_max,
        )

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)

    def to_text(self):
        """ The configuration in the file format; parses back to itself """
        lines = []
        for f in dataclasses.fields(self):
            lines.append(
                '{key} = {value}'.format(
                    key=f.name, value=_format(getattr(self, f.name))
                )
            )
        return '\n'.join(lines) + '\n'


def _format(value):
    if isinstance(value, enum.Enum):
        return value.value
    if isinstance(value, tuple):
        return ','.join(_format(v) for v in value)
    if isinstance(value, bool):
        return 'true' if value else 'false'
    if isinstance(value, float):
        return repr(value)
    if value is None:
        return 'none'
    return str(value)


def _enum(cls):
    def _parse(value):
        if isinstance(value, cls):
            return value
        return cls(str(value).strip().upper())

    return _parse


PARSERS = {
    'schema_version': int,
    'algorithm': _enum(Algorithm),
    'kind': _enum(SensingKind),
    'n': int,
    'p_taps': int,
    'l_max': int,
    'm': _grid(int),
    'snr_db': _grid(float),
    'trials': int,
    'base_seed': int,
    'em': _bool,
    'source': _enum(ChannelSource),
    'channel_file': _optional(str),
    'ds_mode': _enum(DsMode),
    'p10': float,
    'p01': float,
    'gamma': float,
    'epsilon': float,
    'shared_operator': _bool,
    'lambda_update': _enum(LambdaUpdate),
    'tied_sigma': _bool,
    'max_iters': int,
    'stop_tol': float,
    'damping': _optional(float),
    'v_min': float,
    'v_max': float,
    'se_trials': int,
    'se_tol': float,
    'se_max_iter': int,
    'bench_n': _grid(int),
    'bench_p': _grid(int),
    'bench_iters': int,
}


def parse_config(text):
    """ The key-value pairs of a configuration file

    >>> parse_config('schema_version = 1\\n# comment\\nm = 10,20')
    {'schema_version': '1', 'm': '10,20'}
    """
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line or line.startswith('#'):
            continue

        if '=' not in line:
            raise ConfigError(
                'line {lineno}: expected "key = value"'.format(lineno=lineno)
            )

        key, value = (part.strip() for part in line.split('=', 1))
        if key not in PARSERS:
            raise UnknownKey(
                'line {lineno}: unknown key {key!r}'.format(
                    lineno=lineno, key=key
                )
            )

        if not values and key != 'schema_version':
            raise SchemaVersionError('schema_version must be the first key')

        values[key] = value

    if 'schema_version' not in values:
        raise SchemaVersionError('missing schema_version')

    return values


def load_config(text=None, **overrides):
    """ An ExperimentConfig from file text, then explicit overrides """
    values = parse_config(text) if text is not None else {}
    for key, value in overrides.items():
        if key not in PARSERS:
            raise UnknownKey('unknown key {key!r}'.format(key=key))
        if value is not None:
            values[key] = value
    return ExperimentConfig(**values)
