from __future__ import annotations

import itertools
import logging
import math
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, FrozenSet, Iterator, List, Optional, Tuple, Union

import numpy as np

from ext.errors import ConfigurationError, DomainRangeError, RepresentabilityError

logger = logging.getLogger('ulamlab.semigroup')

KINDS = ('naturals-add', 'integers-mod-m', 'reals-positive-mul-grid', 'vector-naturals-k', 'reals-add-grid')

Number = Union[int, float, Fraction]


def to_fraction(value: Any) -> Fraction:
    """Reads an exact rational from a config value ('1/4', 0.25, 3)"""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, float):
        return Fraction(repr(value))
    return Fraction(str(value).strip())


@dataclass(frozen=True, order=True)
class Element:
    """A semigroup element stored as exact integer grid indices"""
    coords: Tuple[int, ...]

    def __repr__(self) -> str:
        if len(self.coords) == 1:
            return str(self.coords[0])
        return '(' + ','.join(map(str, self.coords)) + ')'

    @property
    def index(self) -> int:
        return self.coords[0]


@dataclass(frozen=True)
class SemigroupDomain:
    """A commutative semigroup realized on an exact integer grid.

    ``extent`` is the largest admissible absolute grid index. For
    reals-positive-mul-grid the index is the exponent of ``base``
    in units of ``step``.
    """
    kind: str
    modulus: Optional[int] = None
    dimension: int = 1
    step: Fraction = Fraction(1)
    extent: int = 4096
    base: Fraction = Fraction(2)

    def __post_init__(self) -> None:
        problems = []
        if self.kind not in KINDS:
            problems.append(f'unknown domain kind {self.kind!r}')
        if self.kind == 'integers-mod-m' and (not self.modulus or self.modulus < 1):
            problems.append('integers-mod-m needs a modulus m >= 1')
        if self.kind == 'vector-naturals-k' and self.dimension < 1:
            problems.append('vector-naturals-k needs a dimension k >= 1')
        if self.step <= 0:
            problems.append('grid step must be positive')
        if self.kind == 'reals-positive-mul-grid' and self.base <= 1:
            problems.append('multiplicative grid base must exceed 1')
        if problems:
            raise ConfigurationError(problems)

    @classmethod
    def from_config(cls, config: Dict[str, Any]) -> SemigroupDomain:
        kind = config.get('kind')
        step = to_fraction(config.get('step') or 1)
        extent = config.get('extent')
        if kind == 'integers-mod-m':
            return cls(kind, modulus=int(config.get('modulus') or 0))
        if extent is None:
            index_extent = 4096
        elif kind in ('reals-add-grid', 'reals-positive-mul-grid'):
            index_extent = math.floor(to_fraction(extent) / step)
        else:
            index_extent = int(extent)
        return cls(
            kind,
            dimension=int(config.get('dimension') or 1) if kind == 'vector-naturals-k' else 1,
            step=step,
            extent=index_extent,
            base=to_fraction(config.get('base') or 2),
        )

    def __str__(self) -> str:
        return self.describe()

    def describe(self) -> str:
        if self.kind == 'integers-mod-m':
            return f'integers-mod-{self.modulus}'
        if self.kind == 'vector-naturals-k':
            return f'vector-naturals-{self.dimension} (extent {self.extent})'
        if self.kind == 'reals-add-grid':
            return f'reals-add-grid (step {self.step}, extent {self.extent * self.step})'
        if self.kind == 'reals-positive-mul-grid':
            return f'reals-positive-mul-grid ({self.base}^(k*{self.step}), |k| <= {self.extent})'
        return f'naturals-add (extent {self.extent})'

    @property
    def is_finite(self) -> bool:
        return self.kind == 'integers-mod-m'

    @property
    def identity(self) -> Optional[Element]:
        return Element((0,) * self.dimension)

    def contains(self, e: Element) -> bool:
        if len(e.coords) != self.dimension:
            return False
        if self.kind == 'integers-mod-m':
            return 0 <= e.index < self.modulus
        if self.kind in ('naturals-add', 'vector-naturals-k'):
            return all(0 <= c <= self.extent for c in e.coords)
        return abs(e.index) <= self.extent

    def check(self, e: Element) -> Element:
        if not self.contains(e):
            raise DomainRangeError(e, self)
        return e

    def op(self, a: Element, b: Element) -> Element:
        if self.kind == 'integers-mod-m':
            return Element(((a.index + b.index) % self.modulus,))
        return self.check(Element(tuple(x + y for x, y in zip(a.coords, b.coords))))

    def pow(self, a: Element, n: int) -> Element:
        if n < 1:
            raise ValueError(f'pow needs n >= 1, got {n}')
        if self.kind == 'integers-mod-m':
            return Element(((a.index * n) % self.modulus,))
        return self.check(Element(tuple(c * n for c in a.coords)))

    def orbit(self, y: Element, a: Element, n: int) -> Element:
        """y * a^n, with n = 0 giving y"""
        if n == 0:
            return y
        return self.op(y, self.pow(a, n))

    def value(self, e: Element) -> Union[Fraction, float, Tuple[int, ...]]:
        """The exact value an element stands for.

        Vectors evaluate to their coordinate tuple; mul-grid points whose
        exponent is not an integer fall back to float.
        """
        if self.kind == 'vector-naturals-k':
            return e.coords
        if self.kind == 'reals-add-grid':
            return e.index * self.step
        if self.kind == 'reals-positive-mul-grid':
            exponent = e.index * self.step
            if exponent.denominator == 1:
                return self.base ** int(exponent)
            return float(self.base) ** float(exponent)
        return Fraction(e.index)

    def scalar(self, e: Element) -> float:
        value = self.value(e)
        if isinstance(value, tuple):
            return math.sqrt(sum(c * c for c in value))
        return float(value)

    def magnitude(self, e: Element) -> float:
        return abs(self.scalar(e))

    def variables(self, e: Element, prefix: str='x') -> Dict[str, complex]:
        """Binds an element to DSL variable names: x, and x1..xk on vector domains.

        The first argument also binds ``n`` to its grid index.
        """
        values: Dict[str, complex] = {prefix: complex(self.scalar(e))}
        if prefix == 'x':
            values['n'] = complex(e.index)
        if self.kind == 'vector-naturals-k':
            for i, c in enumerate(e.coords, 1):
                values[f'{prefix}{i}'] = complex(c)
        return values

    def variable_names(self, prefix: str='x') -> List[str]:
        names = [prefix, 'n'] if prefix == 'x' else [prefix]
        if self.kind == 'vector-naturals-k':
            names.extend(f'{prefix}{i}' for i in range(1, self.dimension + 1))
        return names

    def exact_variables(self, e: Element, prefix: str='x') -> Dict[str, Fraction]:
        value = self.value(e)
        values: Dict[str, Fraction] = {'n': Fraction(e.index)} if prefix == 'x' else {}
        if isinstance(value, tuple):
            values.update({f'{prefix}{i}': Fraction(c) for i, c in enumerate(value, 1)})
            values[prefix] = Fraction(self.scalar(e))
            return values
        if isinstance(value, float):
            raise RepresentabilityError(value, self)
        values[prefix] = value
        return values

    def from_value(self, value: Union[Fraction, Tuple[Fraction, ...]]) -> Element:
        """Maps an exact value back onto the grid"""
        if isinstance(value, tuple):
            if self.kind != 'vector-naturals-k' or any(Fraction(v).denominator != 1 for v in value):
                raise RepresentabilityError(value, self)
            return self.check(Element(tuple(int(v) for v in value)))
        value = Fraction(value)
        if self.kind == 'integers-mod-m':
            if value.denominator != 1:
                raise RepresentabilityError(value, self)
            return Element((int(value) % self.modulus,))
        if self.kind == 'reals-positive-mul-grid':
            if value <= 0:
                raise RepresentabilityError(value, self)
            k = round(math.log(value) / (math.log(self.base) * float(self.step)))
            candidate = Element((k,))
            exact = self.value(candidate)
            if isinstance(exact, float) or exact != value:
                raise RepresentabilityError(value, self)
            return self.check(candidate)
        index = value / self.step
        if index.denominator != 1:
            raise RepresentabilityError(value, self)
        return self.check(Element((int(index),)))

    def halve(self, e: Element) -> Element:
        if self.kind in ('integers-mod-m', 'reals-positive-mul-grid') or any(c % 2 for c in e.coords):
            raise RepresentabilityError(f'{self.value(e)}/2', self)
        return Element(tuple(c // 2 for c in e.coords))


@dataclass
class Window:
    """A finite ordered evaluation set and its pair-sampling policy"""
    elements: List[Element]
    policy: str = 'exhaustive'
    count: int = 0
    seed: int = 0
    reach: List[Element] = field(default_factory=list)
    _pairs: Optional[List[Tuple[Element, Element]]] = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        problems = []
        if not self.elements:
            problems.append('window is empty')
        duplicates = sorted(e for e, n in Counter(self.elements).items() if n > 1)
        if duplicates:
            problems.append(f'window has duplicate elements {duplicates}')
        if self.policy not in ('exhaustive', 'random'):
            problems.append(f'unknown pair policy {self.policy!r}')
        if self.policy == 'random' and self.count < 1:
            problems.append('random pair policy needs a positive count')
        if problems:
            raise ConfigurationError(problems)

    @property
    def evaluated(self) -> FrozenSet[Element]:
        """The elements maps may be read at: the window and its reach"""
        return frozenset(self.elements) | frozenset(self.reach)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self) -> Iterator[Element]:
        return iter(self.elements)

    def rng(self, stream: int=0) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, stream]))

    def pairs(self) -> List[Tuple[Element, Element]]:
        if self._pairs is None:
            if self.policy == 'exhaustive':
                self._pairs = list(itertools.product(self.elements, repeat=2))
            else:
                picks = self.rng().integers(0, len(self.elements), size=(self.count, 2))
                self._pairs = [(self.elements[i], self.elements[j]) for i, j in picks]
        return self._pairs

    def triples(self, limit: int=4096) -> List[Tuple[Element, Element, Element]]:
        if len(self.elements) ** 3 <= limit:
            return list(itertools.product(self.elements, repeat=3))
        picks = self.rng(1).integers(0, len(self.elements), size=(limit, 3))
        return [(self.elements[i], self.elements[j], self.elements[k]) for i, j, k in picks]

    def outer_half(self, domain: SemigroupDomain) -> Tuple[List[Element], List[Element]]:
        """Splits the window by magnitude into inner and outer halves"""
        ordered = sorted(self.elements, key=lambda e: (domain.magnitude(e), e))
        middle = len(ordered) // 2
        return ordered[:middle], ordered[middle:]

    def describe(self) -> Dict[str, Any]:
        return {
            'size': len(self.elements),
            'first': repr(self.elements[0]),
            'last': repr(self.elements[-1]),
            'policy': self.policy,
            'reach': len(self.reach),
            'pairs': len(self.pairs()),
        }


def _index_bounds(domain: SemigroupDomain, start: Any, stop: Any) -> Tuple[int, int]:
    if domain.kind == 'reals-positive-mul-grid':
        unit = math.log(domain.base) * float(domain.step)
        low = math.ceil(math.log(float(to_fraction(start))) / unit - 1e-9)
        high = math.floor(math.log(float(to_fraction(stop))) / unit + 1e-9)
        return low, high
    low_value = to_fraction(start) / domain.step
    high_value = to_fraction(stop) / domain.step
    return math.ceil(low_value), math.floor(high_value)


def enumerate_window(domain: SemigroupDomain, spec: Dict[str, Any]) -> Window:
    """Builds the deterministic window a config describes.

    ``spec`` holds either ``full``, explicit ``elements`` or a
    ``start``/``stop`` value range (a per-coordinate box on vector domains).
    A ``reach`` value past ``stop`` widens the region maps are evaluated on
    without adding pairs to the window.
    """
    policy = spec.get('pairs', 'exhaustive')
    count = int(spec.get('count') or 0)
    seed = int(spec.get('seed') or 0)
    stride = int(spec.get('stride') or 1)

    if spec.get('elements'):
        elements = []
        for raw in spec['elements']:
            if isinstance(raw, (list, tuple)):
                elements.append(domain.from_value(tuple(to_fraction(c) for c in raw)))
            else:
                elements.append(domain.from_value(to_fraction(raw)))
    elif spec.get('full'):
        if not domain.is_finite:
            raise ConfigurationError([f'a full window needs a finite domain, not {domain.describe()}'])
        elements = [Element((k,)) for k in range(0, domain.modulus, stride)]
    elif spec.get('start') is not None and spec.get('stop') is not None:
        low, high = _index_bounds(domain, spec['start'], spec['stop'])
        axis = range(low, high + 1, stride)
        if domain.kind == 'integers-mod-m':
            axis = range(max(low, 0), min(high, domain.modulus - 1) + 1, stride)
        elements = [Element(c) for c in itertools.product(axis, repeat=domain.dimension)]
        for e in elements:
            if not domain.contains(e):
                raise ConfigurationError([f'window element {e!r} lies outside {domain.describe()}'])
    else:
        raise ConfigurationError(['window needs full, elements or start/stop'])

    reach: List[Element] = []
    if spec.get('reach') is not None:
        if spec.get('start') is None or spec.get('elements') or spec.get('full'):
            raise ConfigurationError(['reach extends a start/stop window'])
        low, high = _index_bounds(domain, spec['start'], spec['reach'])
        inside = set(elements)
        for c in itertools.product(range(low, high + 1), repeat=domain.dimension):
            e = Element(c)
            if e in inside:
                continue
            if not domain.contains(e):
                raise ConfigurationError([f'reach element {e!r} lies outside {domain.describe()}'])
            reach.append(e)

    window = Window(elements, policy=policy, count=count, seed=seed, reach=reach)
    logger.debug(f'Enumerated {len(window)} elements on {domain.describe()}')
    return window
