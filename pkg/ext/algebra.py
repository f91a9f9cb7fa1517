from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Any, Callable, Dict, Iterable, Mapping, NewType, Optional, Sequence, Tuple, Union

from ext.errors import ConfigurationError
from ext.semigroup import Element

OVERFLOW = 1e300
ROUNDOFF = 64 * 2.220446049250313e-16

NORMS = ('max', 'euclidean', 'modulus')

PrincipalComplex = NewType('PrincipalComplex', complex)

Scalar = Union[int, float, complex]


def principal(z: complex) -> PrincipalComplex:
    """Moves the imaginary part of ``z`` into (-pi, pi]"""
    z = complex(z)
    im = z.imag
    if -math.pi < im <= math.pi:
        return PrincipalComplex(z)
    im = math.remainder(im, 2 * math.pi)
    if im <= -math.pi:
        im += 2 * math.pi
    return PrincipalComplex(complex(z.real, im))


def is_overflow(z: complex) -> bool:
    return not (cmath.isfinite(z) and abs(z) <= OVERFLOW)


@dataclass(frozen=True)
class AlgebraSpec:
    """C^d with the componentwise product and a chosen norm"""
    dimension: int = 1
    norm: str = 'modulus'

    def __post_init__(self) -> None:
        problems = []
        if self.dimension < 1:
            problems.append('algebra dimension must be at least 1')
        if self.norm not in NORMS:
            problems.append(f'unknown norm {self.norm!r}')
        elif self.norm == 'modulus' and self.dimension != 1:
            problems.append('the modulus norm needs dimension 1')
        if problems:
            raise ConfigurationError(problems)

    @classmethod
    def from_config(cls, config: Mapping[str, Any]) -> AlgebraSpec:
        dimension = int(config.get('dimension') or 1)
        return cls(dimension, config.get('norm') or ('modulus' if dimension == 1 else 'max'))

    @property
    def multiplicative(self) -> bool:
        return self.dimension == 1 and self.norm == 'modulus'

    @property
    def unit(self) -> AlgebraValue:
        return AlgebraValue((1 + 0j,) * self.dimension, self)

    @property
    def zero(self) -> AlgebraValue:
        return AlgebraValue((0j,) * self.dimension, self)

    def scalar(self, c: Scalar) -> AlgebraValue:
        return AlgebraValue((complex(c),) * self.dimension, self)

    def make(self, components: Iterable[Scalar]) -> AlgebraValue:
        return AlgebraValue(tuple(complex(c) for c in components), self)

    def norm_of(self, components: Sequence[complex]) -> float:
        if self.norm == 'euclidean':
            return math.sqrt(sum(abs(c) ** 2 for c in components))
        return max(abs(c) for c in components)

    def describe(self) -> str:
        if self.dimension == 1:
            return 'C'
        return f'C^{self.dimension} ({self.norm} norm)'


@dataclass(frozen=True)
class AlgebraValue:
    components: Tuple[complex, ...]
    spec: AlgebraSpec
    overflowed: bool = False

    def __post_init__(self) -> None:
        if len(self.components) != self.spec.dimension:
            raise ValueError(f'{len(self.components)} components for {self.spec.describe()}')
        if not self.overflowed and any(is_overflow(c) for c in self.components):
            object.__setattr__(self, 'overflowed', True)

    def _combine(self, other: Any, op: Callable[[complex, complex], complex]) -> AlgebraValue:
        if isinstance(other, AlgebraValue):
            pairs = zip(self.components, other.components)
            flag = self.overflowed or other.overflowed
        else:
            pairs = ((c, complex(other)) for c in self.components)
            flag = self.overflowed
        components = []
        for x, y in pairs:
            try:
                components.append(op(x, y))
            except (OverflowError, ZeroDivisionError):
                components.append(complex(math.inf, 0))
                flag = True
        return AlgebraValue(tuple(components), self.spec, flag)

    def __add__(self, other: Any) -> AlgebraValue:
        return self._combine(other, lambda x, y: x + y)

    __radd__ = __add__

    def __sub__(self, other: Any) -> AlgebraValue:
        return self._combine(other, lambda x, y: x - y)

    def __rsub__(self, other: Any) -> AlgebraValue:
        return self._combine(other, lambda x, y: y - x)

    def __mul__(self, other: Any) -> AlgebraValue:
        return self._combine(other, lambda x, y: x * y)

    __rmul__ = __mul__

    def __truediv__(self, other: Any) -> AlgebraValue:
        return self._combine(other, lambda x, y: x / y)

    def __neg__(self) -> AlgebraValue:
        return AlgebraValue(tuple(-c for c in self.components), self.spec, self.overflowed)

    def norm(self) -> float:
        if self.overflowed:
            return math.inf
        return self.spec.norm_of(self.components)

    def exp(self) -> AlgebraValue:
        """Componentwise exponential, the exp of the componentwise algebra"""
        return self._combine(0, lambda x, _: cmath.exp(x))

    def unit_multiple(self) -> Optional[complex]:
        first = self.components[0]
        if all(c == first for c in self.components):
            return first
        return None

    def to_json(self) -> Any:
        if self.spec.dimension == 1:
            return complex_to_json(self.components[0])
        return [complex_to_json(c) for c in self.components]


def complex_to_json(z: complex) -> Any:
    return [float_to_json(z.real), float_to_json(z.imag)]


def float_to_json(x: float) -> Any:
    if math.isfinite(x):
        return x
    return str(x)


def norm(x: AlgebraValue) -> float:
    return x.norm()


def in_M(g: Callable[[Element], AlgebraValue], a: Element) -> bool:
    """a in M_g: g(a) is an exact scalar multiple of the unit"""
    return g(a).unit_multiple() is not None


def hat_lift(g: Callable[[Element], AlgebraValue], a: Element) -> complex:
    c = g(a).unit_multiple()
    if c is None:
        return 1 + 0j
    return c


@dataclass(frozen=True)
class GeneralizedDistance:
    """A distance that may be +infinity, with the element attaining the sup"""
    value: float
    witness: Optional[Element] = None
    overflowed: bool = False

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)

    def __float__(self) -> float:
        return self.value

    def __le__(self, other: Any) -> bool:
        return self.value <= float(other)

    def __lt__(self, other: Any) -> bool:
        return self.value < float(other)


MapLike = Union[Callable[[Element], AlgebraValue], Mapping[Element, AlgebraValue]]


def _getter(u: MapLike) -> Callable[[Element], AlgebraValue]:
    if isinstance(u, Mapping):
        return u.__getitem__
    return u


def roundoff_floor(u: AlgebraValue, v: AlgebraValue) -> float:
    return ROUNDOFF * max(u.norm(), v.norm())


def generalized_metric(u: MapLike, v: MapLike, weight: Callable[[Element], float], window: Iterable[Element], roundoff: bool=False) -> GeneralizedDistance:
    """sup over the window of ||u(y) - v(y)|| / weight(y).

    Points of zero weight need u(y) == v(y), otherwise the distance is
    infinite. With ``roundoff`` the difference is floored by the rounding
    allowance of the compared values first.
    """
    get_u, get_v = _getter(u), _getter(v)
    best = 0.0
    witness: Optional[Element] = None
    for y in window:
        uy, vy = get_u(y), get_v(y)
        if uy.overflowed or vy.overflowed:
            return GeneralizedDistance(math.inf, y, True)
        difference = (uy - vy).norm()
        if roundoff:
            difference = max(0.0, difference - roundoff_floor(uy, vy))
        w = weight(y)
        if w == 0:
            if difference != 0:
                return GeneralizedDistance(math.inf, y)
            continue
        ratio = difference / w
        if not ratio <= OVERFLOW:
            return GeneralizedDistance(math.inf, y, not math.isfinite(difference))
        if ratio > best or witness is None:
            best = max(best, ratio)
            witness = y
    return GeneralizedDistance(best, witness)


def sup_norm(u: MapLike, window: Iterable[Element]) -> GeneralizedDistance:
    get_u = _getter(u)
    best = 0.0
    witness: Optional[Element] = None
    for y in window:
        value = get_u(y).norm()
        if value > best or witness is None:
            best = max(best, value)
            witness = y
    return GeneralizedDistance(best, witness, not math.isfinite(best))


def tabulate(u: MapLike, window: Iterable[Element]) -> Dict[Element, AlgebraValue]:
    get_u = _getter(u)
    return {y: get_u(y) for y in window}
