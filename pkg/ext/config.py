from __future__ import annotations

import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple, Union

from ext.algebra import AlgebraSpec
from ext.errors import ConfigurationError, ExpressionSyntaxError, LabError, UnknownIdentifier
from ext.expression import parse, variables
from ext.report import Verdict
from ext.semigroup import SemigroupDomain, enumerate_window, to_fraction

logger = logging.getLogger('ulamlab.config')

DEFAULT: Dict[str, Any] = {
    'kind': None,
    'description': '',
    'expect': None,
    'seed': None,
    'domain': {
        'kind': 'naturals-add',
        'modulus': None,
        'dimension': 1,
        'step': 1,
        'extent': None,
        'base': 2
    },
    'algebra': {
        'dimension': 1,
        'norm': None
    },
    'window': {
        'start': None,
        'stop': None,
        'reach': None,
        'full': False,
        'elements': [],
        'stride': 1,
        'pairs': 'exhaustive',
        'count': 0,
        'seed': 0
    },
    'params': {},
    'functions': {},
    'controls': {},
    'tolerances': {
        'tol': 1e-9,
        'n_max': 512,
        'tail_tol': 1e-6,
        'unbounded_threshold': 1e6,
        'max_steps': 200
    },
    'options': {},
    'report': {
        'csv': True
    }
}


@dataclass(frozen=True)
class KindSchema:
    """What a scenario kind needs from its config

    ``expressions`` maps the option keys the kind parses as expressions to
    their arity: 1 sees the x variables, 2 sees y as well.
    """
    requires: Tuple[str, ...] = ()
    expressions: Mapping[str, int] = field(default_factory=dict)


class ConfigDict(dict):
    """A scenario config that falls back to DEFAULT for missing keys"""

    def __init__(self, *args: Any, **kwargs: Any) -> None:
        self._default = kwargs.pop('_default', DEFAULT)
        super().__init__(*args, **kwargs)

    def __getitem__(self, key: str) -> Any:
        try:
            item = super().__getitem__(key)
        except KeyError:
            item = self._default[key]

        if isinstance(item, dict):
            return ConfigDict(item, _default=tryget(self._default, key) or {})
        elif isinstance(item, list):
            return ConfigList(item, _default=tryget(self._default, key) or [])

        return item

    def __getattr__(self, name: str) -> Any:
        try:
            return super().__getattribute__(name)
        except AttributeError as e:
            try:
                return self[name]
            except KeyError:
                raise e

    def get(self, key: str, default: Any=None) -> Any:
        try:
            return self[key]
        except KeyError:
            return default

    def __copy__(self) -> ConfigDict:
        return ConfigDict(copy.copy(dict(self)), _default=self._default)

    def plain(self) -> Dict[str, Any]:
        return copy.deepcopy(dict(self))


class ConfigList(list):
    def __init__(self, *args: Any, **kwargs: Any) -> None:
        self._default = kwargs.pop('_default', [])
        super().__init__(*args, **kwargs)

    def __iter__(self) -> Any:
        for i in super().__iter__():
            if isinstance(i, dict):
                i = ConfigDict(i, _default={})
            yield i


def tryget(obj: Union[dict, list], key: Any) -> Any:
    try:
        return obj[key]
    except (KeyError, IndexError, TypeError):
        return None


def _check_expression(problems: List[str], where: str, source: Any, names: Iterable[str]) -> None:
    if not isinstance(source, str) or not source.strip():
        problems.append(f'{where}: expression must be a non-empty string')
        return
    try:
        tree = parse(source)
    except (ExpressionSyntaxError, UnknownIdentifier) as e:
        problems.append(f'{where}: {e}')
        return
    allowed = set(names)
    for var in variables(tree):
        if var.name not in allowed:
            problems.append(f'{where}: unknown identifier {var.name!r} at offset {var.offset}')


def _expressions(spec: Any) -> List[Any]:
    if isinstance(spec, list):
        return list(spec)
    return [spec]


def validate(config: Mapping[str, Any], kinds: Mapping[str, KindSchema]) -> List[str]:
    """Lists every schema and cross-reference problem of a config"""
    problems: List[str] = []
    config = ConfigDict(config)

    kind = config.kind
    if not kind:
        problems.append('kind: missing scenario kind')
    elif kind not in kinds:
        problems.append(f'kind: unknown scenario kind {kind!r}')

    expect = config.expect
    if expect is not None and expect not in {v.value for v in Verdict}:
        problems.append(f'expect: unknown verdict {expect!r}')

    seed = config.seed
    if seed is not None and (not isinstance(seed, int) or seed < 0):
        problems.append(f'seed: must be a nonnegative integer, got {seed!r}')

    domain: Optional[SemigroupDomain] = None
    try:
        domain = SemigroupDomain.from_config(config.domain)
    except (ConfigurationError, ValueError, ZeroDivisionError) as e:
        problems.append(f'domain: {e}')

    try:
        AlgebraSpec.from_config(config.algebra)
    except (ConfigurationError, ValueError) as e:
        problems.append(f'algebra: {e}')

    if domain is not None:
        try:
            enumerate_window(domain, config.window)
        except (LabError, ValueError, ZeroDivisionError) as e:
            problems.append(f'window: {e}')

    params = config.params
    for name, value in params.items():
        try:
            to_fraction(value)
        except (ValueError, TypeError, ZeroDivisionError):
            problems.append(f'params.{name}: not a number: {value!r}')

    x_names = (domain.variable_names('x') if domain else ['x', 'n']) + list(params)
    y_names = x_names + (domain.variable_names('y') if domain else ['y'])

    for name, spec in config.functions.items():
        if not isinstance(spec, dict):
            spec = {'expr': spec}
        if 'expr' not in spec:
            problems.append(f'functions.{name}: missing expr')
        for i, source in enumerate(_expressions(spec.get('expr'))):
            _check_expression(problems, f'functions.{name}.expr[{i}]' if isinstance(spec.get('expr'), list) else f'functions.{name}.expr', source, x_names)
        perturbation = spec.get('perturbation')
        if perturbation:
            _check_expression(problems, f'functions.{name}.perturbation.envelope', perturbation.get('envelope'), x_names)
            if perturbation.get('seed') is None and seed is None:
                problems.append(f'functions.{name}.perturbation: missing seed (declare a scenario or perturbation seed)')
            if perturbation.get('kind', 'complex') not in ('complex', 'real'):
                problems.append(f'functions.{name}.perturbation.kind: must be complex or real')
            if perturbation.get('components', 'shared') not in ('shared', 'independent'):
                problems.append(f'functions.{name}.perturbation.components: must be shared or independent')

    for name, spec in config.controls.items():
        if not isinstance(spec, dict):
            spec = {'expr': spec}
        arity = spec.get('arity', 2)
        if arity not in (1, 2):
            problems.append(f'controls.{name}.arity: must be 1 or 2, got {arity!r}')
            continue
        _check_expression(problems, f'controls.{name}.expr', spec.get('expr'), x_names if arity == 1 else y_names)

    schema = kinds.get(kind) or KindSchema()
    options = config.options
    for key, arity in schema.expressions.items():
        if options.get(key) is None:
            continue
        for source in _expressions(options[key]):
            if isinstance(source, (int, float)) and not isinstance(source, bool):
                source = str(source)
            _check_expression(problems, f'options.{key}', source, x_names if arity == 1 else y_names)

    for i, member in enumerate(options.get('family') or []):
        if not isinstance(member, dict):
            problems.append(f'options.family[{i}]: must be an object')
            continue
        for key in ('rho', 'psi'):
            _check_expression(problems, f'options.family[{i}].{key}', member.get(key), x_names)
        multiplier = 'c' if 'c' in member else 'p'
        _check_expression(problems, f'options.family[{i}].{multiplier}', str(member.get(multiplier, '')), x_names)

    for key, value in dict(config.tolerances).items():
        if key not in DEFAULT['tolerances']:
            problems.append(f'tolerances.{key}: unknown tolerance')
        elif not isinstance(value, (int, float)) or isinstance(value, bool) or value <= 0:
            problems.append(f'tolerances.{key}: must be a positive number, got {value!r}')

    for name in schema.requires:
        section, _, key = name.partition('.')
        if key not in config[section]:
            problems.append(f'{section}.{key}: required by {kind}')

    return problems


class ConfigManager:
    """Loads, caches and validates scenario configs"""

    def __init__(self, kinds: Mapping[str, KindSchema]=None) -> None:
        self.kinds: Mapping[str, KindSchema] = kinds or {}
        self.configs: Dict[Path, Dict[str, Any]] = {}

    def read(self, path: Union[str, Path]) -> Dict[str, Any]:
        path = Path(path)
        if path not in self.configs:
            try:
                text = path.read_text(encoding='utf8')
            except OSError as e:
                raise ConfigurationError([f'cannot read {path}: {e.strerror or e}']) from e
            try:
                data = json.loads(text)
            except json.JSONDecodeError as e:
                raise ConfigurationError([f'{path} is not valid JSON: {e.msg} at line {e.lineno} column {e.colno}']) from e
            if not isinstance(data, dict):
                raise ConfigurationError([f'{path} must hold a JSON object'])
            self.configs[path] = data
            logger.debug(f'Read {path}')
        return copy.deepcopy(self.configs[path])

    def validate(self, config: Mapping[str, Any]) -> List[str]:
        return validate(config, self.kinds)

    def get_config(self, path: Union[str, Path], seed: Optional[int]=None) -> ConfigDict:
        """Reads and validates a config, applying a seed override"""
        data = self.read(path)
        if seed is not None:
            data['seed'] = seed
        problems = self.validate(data)
        if problems:
            raise ConfigurationError(problems)
        return ConfigDict(data)
