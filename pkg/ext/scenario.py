from __future__ import annotations

import hashlib
import logging
from typing import TYPE_CHECKING, Any, Callable, Dict, List, Mapping, Optional, Sequence

from ext.algebra import AlgebraSpec
from ext.config import ConfigDict, KindSchema
from ext.errors import ConfigurationError
from ext.expression import Expression
from ext.functions import ApproximateMap, ControlFunction, DomainMap, Perturbation, ScalarMap
from ext.report import RunReport, Verdict
from ext.semigroup import Element, SemigroupDomain, Window, enumerate_window, to_fraction

if TYPE_CHECKING:
    from lab import ulamlab

logger = logging.getLogger('ulamlab.scenario')


class Scenario:
    """A scenario kind a cog can run, declared with :func:`scenario`"""

    def __init__(self, func: Callable, *, kind: str, anchor: str, description: str, requires: Sequence[str]=(),
                 expressions: Mapping[str, int]=None) -> None:
        self.callback = func
        self.kind = kind
        self.anchor = anchor
        self.description = description
        self.requires = tuple(requires)
        self.expressions = dict(expressions or {})

        self.__cog_scenario__ = True

    def __repr__(self) -> str:
        return f'<Scenario {self.kind}>'

    @property
    def schema(self) -> KindSchema:
        return KindSchema(self.requires, self.expressions)

    @property
    def signature(self) -> str:
        return f'{self.kind} — {self.description} ({self.anchor})'

    def run(self, cog: Cog, ctx: ScenarioContext) -> Verdict:
        verdict = self.callback(cog, ctx)
        ctx.report.verdict = Verdict(verdict)
        return ctx.report.verdict


def scenario(kind: str, **attrs: Any) -> Callable:
    def decorator(func: Callable) -> Scenario:
        return Scenario(func, kind=kind, **attrs)
    return decorator


class Cog:
    """A family of scenario kinds loaded from cogs/"""

    def __init__(self, lab: ulamlab) -> None:
        self.lab = lab
        self.logger = logging.getLogger(f'ulamlab.cogs.{self.__class__.__name__.lower()}')
        self.scenarios: List[Scenario] = []

        for func in self.__class__.__dict__.values():
            if isinstance(func, Scenario):
                self.scenarios.append(func)


def derive_seed(*parts: Any) -> int:
    digest = hashlib.blake2b(repr(parts).encode(), digest_size=8).digest()
    return int.from_bytes(digest, 'little')


class ScenarioContext:
    """Everything a scenario needs, built lazily from a validated config"""

    def __init__(self, config: ConfigDict) -> None:
        self.config = config
        self.kind: str = config.kind
        self.seed: Optional[int] = config.seed
        self.domain = SemigroupDomain.from_config(config.domain)
        self.algebra = AlgebraSpec.from_config(config.algebra)
        self.window: Window = enumerate_window(self.domain, config.window)
        self.params: Dict[str, float] = {k: float(to_fraction(v)) for k, v in config.params.items()}
        self.tolerances = config.tolerances
        self.options = config.options
        self.report = RunReport(config.plain(), self.kind, window=self.window.describe())
        self.report.window['domain'] = self.domain.describe()
        self.report.window['algebra'] = self.algebra.describe()
        self._functions: Dict[str, ApproximateMap] = {}
        self._controls: Dict[str, ControlFunction] = {}

    @property
    def tol(self) -> float:
        return float(self.tolerances.tol)

    @property
    def max_steps(self) -> int:
        return int(self.tolerances.max_steps)

    def param(self, name: str, default: float=None) -> float:
        if name in self.params:
            return self.params[name]
        if name in self.options:
            return float(to_fraction(self.options[name]))
        if default is None:
            raise ConfigurationError([f'params.{name}: required by {self.kind}'])
        return default

    def expression(self, source: str, arity: int=1) -> Expression:
        names = self.domain.variable_names('x') + list(self.params)
        if arity == 2:
            names += self.domain.variable_names('y')
        return Expression(source, names).bind(self.params)

    def has_function(self, name: str) -> bool:
        return name in self.config.functions

    def function(self, name: str, spec: AlgebraSpec=None) -> ApproximateMap:
        key = name if spec is None else f'{name}@{spec.dimension}'
        if key in self._functions:
            return self._functions[key]
        if name not in self.config.functions:
            raise ConfigurationError([f'functions.{name}: required by {self.kind}'])
        raw = self.config.functions[name]
        if not isinstance(raw, dict):
            raw = {'expr': raw}
        sources = raw['expr'] if isinstance(raw['expr'], list) else [raw['expr']]
        perturbation = None
        if raw.get('perturbation'):
            noise = raw['perturbation']
            perturbation = Perturbation(
                self.expression(noise['envelope']),
                derive_seed(self.seed, noise.get('seed'), name),
                noise.get('kind', 'complex'),
                noise.get('components', 'shared'),
            )
        fn = ApproximateMap(name, [self.expression(s) for s in sources], self.domain, spec or self.algebra, perturbation)
        fn.check_envelope(self.window)
        self._functions[key] = fn
        return fn

    def control(self, name: str, arity: int=None) -> ControlFunction:
        if name in self._controls:
            return self._controls[name]
        if name not in self.config.controls:
            raise ConfigurationError([f'controls.{name}: required by {self.kind}'])
        raw = self.config.controls[name]
        if not isinstance(raw, dict):
            raw = {'expr': raw}
        declared = raw.get('arity', 2)
        if arity is not None and declared != arity:
            raise ConfigurationError([f'controls.{name}: {self.kind} needs arity {arity}, got {declared}'])
        control = ControlFunction.from_expression(name, declared, self.expression(raw['expr'], declared), self.domain)
        control.verify_nonnegative(self.window.elements, self.window.pairs())
        self._controls[name] = control
        return control

    def domain_map(self, key: str, sources: Any=None) -> DomainMap:
        if sources is None:
            sources = self.options.get(key)
        if sources is None:
            raise ConfigurationError([f'options.{key}: required by {self.kind}'])
        if not isinstance(sources, list):
            sources = [sources]
        names = self.domain.variable_names('x') + list(self.params)
        constants = {k: to_fraction(v) for k, v in self.config.params.items()}
        return DomainMap(key, [Expression(s, names) for s in sources], self.domain, constants)

    def scalar_map(self, key: str, default: str=None) -> ScalarMap:
        source = self.options.get(key, default)
        if source is None:
            raise ConfigurationError([f'options.{key}: required by {self.kind}'])
        return ScalarMap(key, self.expression(str(source)), self.domain)

    def element(self, raw: Any) -> Element:
        if isinstance(raw, (list, tuple)):
            return self.domain.from_value(tuple(to_fraction(c) for c in raw))
        return self.domain.from_value(to_fraction(raw))

    def element_option(self, key: str, default: Element=None) -> Element:
        raw = self.options.get(key)
        if raw is None:
            if default is None:
                raise ConfigurationError([f'options.{key}: required by {self.kind}'])
            return default
        return self.element(raw)

    def elements_option(self, key: str) -> Optional[List[Element]]:
        raw = self.options.get(key)
        if raw is None:
            return None
        return [self.element(r) for r in raw]

    def sub_window(self, start: Any, stop: Any) -> Window:
        spec = dict(self.config.window)
        spec.update(start=start, stop=stop, elements=[])
        return enumerate_window(self.domain, spec)

    def trace_name(self, *parts: Any) -> str:
        return '_'.join(str(p).replace(',', '-').replace('(', '').replace(')', '') for p in parts)
