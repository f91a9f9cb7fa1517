from __future__ import annotations

import hashlib
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, Mapping, Optional, Sequence, Tuple

import numpy as np
from cachetools import LRUCache

from ext.algebra import AlgebraSpec, AlgebraValue
from ext.errors import ControlError, EvaluationError, HypothesisViolation
from ext.expression import Expression
from ext.semigroup import Element, SemigroupDomain

logger = logging.getLogger('ulamlab.functions')

Map = Callable[[Element], AlgebraValue]

CACHE_SIZE = 1 << 16


class FunctionMap:
    """A named map S -> B with memoized evaluation"""

    def __init__(self, name: str, fn: Map, spec: AlgebraSpec) -> None:
        self.name = name
        self.fn = fn
        self.spec = spec
        self.cache: LRUCache = LRUCache(CACHE_SIZE)

    def __repr__(self) -> str:
        return f'<{self.__class__.__name__} {self.name}>'

    def __call__(self, e: Element) -> AlgebraValue:
        # looked up by hand so deep lazy iterates add one frame per level
        try:
            return self.cache[e]
        except KeyError:
            value = self.cache[e] = self.fn(e)
            return value


@dataclass(frozen=True)
class Perturbation:
    """Deterministic noise of magnitude at most ``envelope(x)`` at every element.

    Draws come from a Philox generator keyed by (seed, coordinates,
    component), so values do not depend on enumeration order.
    """
    envelope: Expression
    seed: int
    kind: str = 'complex'
    components: str = 'shared'

    def uniforms(self, e: Element, component: int) -> Tuple[float, float]:
        digest = hashlib.blake2b(repr((self.seed, e.coords, component)).encode(), digest_size=16).digest()
        generator = np.random.Generator(np.random.Philox(key=int.from_bytes(digest, 'little')))
        u1, u2 = generator.random(2)
        return float(u1), float(u2)

    def bound(self, env: Mapping[str, complex]) -> float:
        try:
            value = self.envelope(env)
        except OverflowError:
            return math.inf
        if value.imag != 0 or value.real < 0:
            raise ControlError('envelope', env.get('x'), value)
        return value.real

    def draw(self, e: Element, env: Mapping[str, complex], spec: AlgebraSpec) -> Tuple[complex, ...]:
        envelope = self.bound(env)
        if envelope == 0:
            return (0j,) * spec.dimension
        independent = self.components == 'independent' and spec.dimension > 1
        scale = 1 / math.sqrt(spec.dimension) if independent and spec.norm == 'euclidean' else 1.0
        values = []
        for component in range(spec.dimension if independent else 1):
            u1, u2 = self.uniforms(e, component)
            magnitude = u1 * envelope * scale
            if self.kind == 'real':
                values.append(complex(magnitude if u2 < 0.5 else -magnitude))
            else:
                theta = math.pi - 2 * math.pi * u2
                values.append(magnitude * complex(math.cos(theta), math.sin(theta)))
        if not independent:
            values = values * spec.dimension
        return tuple(values)


class ApproximateMap(FunctionMap):
    """f: S -> B given by one expression per component plus optional noise"""

    def __init__(self, name: str, expressions: Sequence[Expression], domain: SemigroupDomain, spec: AlgebraSpec, perturbation: Optional[Perturbation]=None) -> None:
        if len(expressions) == 1:
            expressions = list(expressions) * spec.dimension
        if len(expressions) != spec.dimension:
            raise ValueError(f'{name} has {len(expressions)} components for {spec.describe()}')
        self.expressions = list(expressions)
        self.domain = domain
        self.perturbation = perturbation
        self.base_cache: LRUCache = LRUCache(CACHE_SIZE)
        super().__init__(name, self.evaluate, spec)

    def base(self, e: Element) -> AlgebraValue:
        """The unperturbed value"""
        try:
            return self.base_cache[e]
        except KeyError:
            pass
        env = self.domain.variables(e)
        components = []
        overflowed = False
        for expression in self.expressions:
            try:
                components.append(expression(env))
            except OverflowError:
                components.append(complex(math.inf))
                overflowed = True
        value = self.base_cache[e] = AlgebraValue(tuple(components), self.spec, overflowed)
        return value

    def noise(self, e: Element) -> Tuple[complex, ...]:
        if self.perturbation is None:
            return (0j,) * self.spec.dimension
        return self.perturbation.draw(e, self.domain.variables(e), self.spec)

    def evaluate(self, e: Element) -> AlgebraValue:
        value = self.base(e)
        if self.perturbation is None:
            return value
        return value + AlgebraValue(self.noise(e), self.spec)

    def check_envelope(self, window: Iterable[Element]) -> None:
        if self.perturbation is None:
            return
        for e in window:
            bound = self.perturbation.bound(self.domain.variables(e))
            if self.spec.norm_of(self.noise(e)) > bound * (1 + 1e-12):
                raise HypothesisViolation(f'{self.name} perturbation within envelope', repr(e))


class DomainMap:
    """An exact self-map of the domain such as rho, evaluated in rationals"""

    def __init__(self, name: str, expressions: Sequence[Expression], domain: SemigroupDomain, constants: Mapping[str, Fraction]=None) -> None:
        self.name = name
        self.expressions = list(expressions)
        self.domain = domain
        self.constants = dict(constants or {})
        self.cache: Dict[Element, Element] = {}

    def __repr__(self) -> str:
        return f'<DomainMap {self.name}: {", ".join(e.source for e in self.expressions)}>'

    def __call__(self, e: Element) -> Element:
        try:
            return self.cache[e]
        except KeyError:
            pass
        env = {**self.constants, **self.domain.exact_variables(e)}
        if len(self.expressions) == 1:
            value: Any = self.expressions[0].exact(env)
        else:
            value = tuple(expr.exact(env) for expr in self.expressions)
        image = self.cache[e] = self.domain.from_value(value)
        return image

    def iterate(self, e: Element, n: int) -> Element:
        for _ in range(n):
            e = self(e)
        return e


class ScalarMap:
    """A complex-valued coefficient map such as p in f(rho(x)) = p(x) f(x) + q(x)"""

    def __init__(self, name: str, expression: Expression, domain: SemigroupDomain) -> None:
        self.name = name
        self.expression = expression
        self.domain = domain
        self.cache: LRUCache = LRUCache(CACHE_SIZE)

    def __call__(self, e: Element) -> complex:
        try:
            return self.cache[e]
        except KeyError:
            value = self.cache[e] = self.expression(self.domain.variables(e))
            return value

    @classmethod
    def constant(cls, name: str, value: complex, domain: SemigroupDomain) -> ScalarMap:
        z = complex(value)
        source = repr(z.real) if z.imag == 0 else f'{z.real!r} + {z.imag!r}*i'
        return cls(name, Expression(source), domain)


class ControlFunction:
    """A nonnegative control of one or two arguments.

    Points where the defining expression is undefined (0 to a negative power)
    or overflows have control value +inf.
    """

    def __init__(self, name: str, arity: int, evaluator: Callable[..., float], source: str='') -> None:
        if arity not in (1, 2):
            raise ValueError(f'control arity must be 1 or 2, got {arity}')
        self.name = name
        self.arity = arity
        self.evaluator = evaluator
        self.source = source
        self.cache: LRUCache = LRUCache(CACHE_SIZE)

    def __repr__(self) -> str:
        return f'<ControlFunction {self.name}/{self.arity}: {self.source}>'

    def __call__(self, *elements: Element) -> float:
        try:
            return self.cache[elements]
        except KeyError:
            value = self.cache[elements] = self.evaluator(*elements)
            return value

    @classmethod
    def from_expression(cls, name: str, arity: int, expression: Expression, domain: SemigroupDomain) -> ControlFunction:
        def evaluate(*elements: Element) -> float:
            env = domain.variables(elements[0], 'x')
            if arity == 2:
                env.update(domain.variables(elements[1], 'y'))
            try:
                value = expression(env)
            except OverflowError:
                return math.inf
            except EvaluationError as e:
                logger.debug(f'{name} undefined at {elements}: {e}')
                return math.inf
            if value.imag != 0 or not value.real >= 0:
                raise ControlError(name, elements, value)
            return value.real
        return cls(name, arity, evaluate, expression.source)

    @classmethod
    def constant(cls, name: str, arity: int, value: float) -> ControlFunction:
        return cls(name, arity, lambda *_: value, repr(value))

    def __add__(self, other: ControlFunction) -> ControlFunction:
        if other.arity != self.arity:
            raise ValueError('controls of different arity cannot be added')
        return ControlFunction(f'{self.name}+{other.name}', self.arity, lambda *e: self(*e) + other(*e), f'({self.source}) + ({other.source})')

    def partial(self, a: Element) -> ControlFunction:
        """y -> psi(a, y)"""
        return ControlFunction(f'{self.name}({a!r},.)', 1, lambda y: self(a, y), self.source)

    def verify_nonnegative(self, window: Sequence[Element], pairs: Optional[Iterable[Tuple[Element, Element]]]=None) -> None:
        points: Iterable[Tuple[Element, ...]]
        if self.arity == 1:
            points = ((e,) for e in window)
        else:
            points = pairs if pairs is not None else ((x, y) for x in window for y in window)
        for point in points:
            value = self(*point)
            if not value >= 0:
                raise ControlError(self.name, point, value)


def derive_pexider_exponential_controls(psi: ControlFunction, g: Map, x0: Element, domain: SemigroupDomain) -> Tuple[ControlFunction, ControlFunction]:
    """psi~(x,y) = psi(x,y) + ||g(x)|| psi(x0,y) and psi^(x,y) = psi(x,y) + psi(x0, x.y)"""
    gx0 = g(x0)
    if (gx0 - gx0.spec.unit).norm() > 1e-12:
        raise HypothesisViolation('g(x0) = 1_B', repr(x0), {'g(x0)': gx0.to_json()})

    tilde = ControlFunction('psi~', 2, lambda x, y: psi(x, y) + g(x).norm() * psi(x0, y), f'{psi.source} + |g(x)|*psi(x0,y)')
    hat = ControlFunction('psi^', 2, lambda x, y: psi(x, y) + psi(x0, domain.op(x, y)), f'{psi.source} + psi(x0,x*y)')
    return tilde, hat


def derive_pexider_linear_control(psi: ControlFunction, p: Callable[[Element], complex], f: Map, g: Map) -> ControlFunction:
    return ControlFunction('psi~', 1, lambda x: psi(x) + abs(p(x)) * (f(x) - g(x)).norm(), f'{psi.source} + |p(x)|*|f(x)-g(x)|')


def derive_pexider_additive_controls(psi: ControlFunction, e: Element, domain: SemigroupDomain) -> Tuple[ControlFunction, ControlFunction]:
    """psi~(x,y) = psi(x,y)+psi(x,e)+psi(e,y) and psi^(x,y) = psi(x+y,e)+psi(x,e)+psi(e,y)"""
    tilde = ControlFunction('psi~', 2, lambda x, y: psi(x, y) + psi(x, e) + psi(e, y), f'{psi.source} + psi(x,e) + psi(e,y)')
    hat = ControlFunction('psi^', 2, lambda x, y: psi(domain.op(x, y), e) + psi(x, e) + psi(e, y), 'psi(x+y,e) + psi(x,e) + psi(e,y)')
    return tilde, hat


@dataclass(frozen=True)
class Defect:
    """A supremum of residual norms and the pair attaining it"""
    value: float
    pair: Optional[Tuple[Element, Element]] = None
    overflowed: bool = False

    def to_json(self) -> Dict[str, Any]:
        return {
            'sup': self.value if math.isfinite(self.value) else str(self.value),
            'argmax': [repr(e) for e in self.pair] if self.pair else None,
            'overflowed': self.overflowed,
        }


def sup_defect(residual: Callable[[Element, Element], AlgebraValue], pairs: Iterable[Tuple[Element, Element]]) -> Defect:
    best = -1.0
    attained: Optional[Tuple[Element, Element]] = None
    for x, y in pairs:
        value = residual(x, y)
        if value.overflowed:
            return Defect(math.inf, (x, y), True)
        size = value.norm()
        if size > best:
            best, attained = size, (x, y)
    return Defect(max(best, 0.0), attained)


def noise_correlation(first: ApproximateMap, second: ApproximateMap, window: Iterable[Element]) -> float:
    """Empirical correlation of the real parts of two maps' noise"""
    a = np.array([first.noise(e)[0].real for e in window])
    b = np.array([second.noise(e)[0].real for e in window])
    if a.std() == 0 or b.std() == 0:
        return 0.0
    return float(np.corrcoef(a, b)[0, 1])

