"""Contraction iteration in a generalized metric space.

Iterates a self-map J from a start f0, measuring successive distances with
the weighted sup metric on a window. Converges when
d(J^{n+1} f0, J^n f0) <= tol (1 - L), so the limit lies within tol of the
fixed point; the a-priori bound is d(J f0, f0) / (1 - L).
"""
from __future__ import annotations

import logging
import math
import sys
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

from ext.algebra import AlgebraSpec, GeneralizedDistance, generalized_metric
from ext.errors import ConfigurationError, ContractionViolation, DegenerateSample, DomainRangeError, HypothesisViolation, NotApplicable, WindowExhausted
from ext.functions import FunctionMap, Map
from ext.semigroup import Element

logger = logging.getLogger('ulamlab.fixedpoint')

Weight = Callable[[Element], float]

RATIO_SLACK = 0.05
RATIO_STRIKES = 3


@dataclass
class IterationOperator:
    """A self-map of B^S with its declared Lipschitz constant"""
    apply: Callable[[Map], Map]
    lipschitz: float
    provenance: str = ''

    def __post_init__(self) -> None:
        if not 0 < self.lipschitz < 1:
            raise HypothesisViolation('Lipschitz constant in (0,1)', self.lipschitz, {'provenance': self.provenance})

    def __call__(self, h: Map) -> Map:
        return self.apply(h)


@dataclass(frozen=True)
class IterationStep:
    step: int
    distance: float
    ratio: Optional[float]


@dataclass
class IterationTrace:
    steps: List[IterationStep] = field(default_factory=list)
    stop_reason: str = 'max-steps'

    def csv_rows(self) -> List[Tuple[Any, ...]]:
        return [(s.step, s.distance, '' if s.ratio is None else s.ratio) for s in self.steps]

    def ratios(self) -> List[float]:
        return [s.ratio for s in self.steps if s.ratio is not None]

    def to_json(self) -> Dict[str, Any]:
        return {
            'stop_reason': self.stop_reason,
            'steps': len(self.steps),
            'max_ratio': max(self.ratios(), default=None),
            'distances': [s.distance for s in self.steps],
        }


@dataclass
class FixedPoint:
    solution: FunctionMap
    bound: float
    trace: IterationTrace
    lipschitz: float
    start_distance: float

    @property
    def converged(self) -> bool:
        return self.trace.stop_reason == 'converged'

    @property
    def steps(self) -> int:
        return len(self.trace.steps)


def _memo(name: str, fn: Map, spec: AlgebraSpec) -> FunctionMap:
    if isinstance(fn, FunctionMap):
        return fn
    return FunctionMap(name, fn, spec)


def iterate_to_fixed_point(J: IterationOperator, f0: Map, weight: Weight, window: Sequence[Element], tol: float, max_steps: int=200, spec: AlgebraSpec=None) -> FixedPoint:
    """Runs J from f0 until successive iterates agree within tol (1 - L).

    Raises NotApplicable when d(J f0, f0) is infinite, ContractionViolation
    when observed ratios exceed L + 0.05 three steps running and
    WindowExhausted when an orbit leaves the domain.
    """
    if tol <= 0:
        raise ConfigurationError([f'tolerance must be positive, got {tol}'])
    spec = spec or getattr(f0, 'spec', None) or AlgebraSpec()
    sys.setrecursionlimit(max(sys.getrecursionlimit(), 64 * max_steps + 1000))

    L = J.lipschitz
    current = _memo('J^0 f0', f0, spec)
    trace = IterationTrace()
    strikes = 0
    previous: Optional[float] = None
    start_distance = math.nan

    for n in range(max_steps + 1):
        try:
            following = _memo(f'J^{n + 1} f0', J(current), spec)
            exact = generalized_metric(following, current, weight, window)
            floored = generalized_metric(following, current, weight, window, roundoff=True)
        except DomainRangeError as e:
            raise WindowExhausted(e.element, n) from e

        if n == 0:
            start_distance = exact.value if exact.finite else floored.value
            if not floored.finite:
                raise NotApplicable(f'd(Jf0, f0) is infinite at {floored.witness!r}')
        elif not floored.finite:
            trace.stop_reason = 'overflow'
            logger.debug(f'overflow at step {n}, keeping J^{n} f0')
            break

        distance = floored.value
        ratio = distance / previous if previous else None
        trace.steps.append(IterationStep(n, distance, ratio))
        logger.debug(f'step {n}: d = {distance:.6g} ratio = {ratio}')

        if ratio is not None and ratio > L + RATIO_SLACK:
            strikes += 1
            if strikes >= RATIO_STRIKES:
                raise ContractionViolation(L, [s.ratio for s in trace.steps[-RATIO_STRIKES:]])
        else:
            strikes = 0

        current = following
        if distance <= tol * (1 - L):
            trace.stop_reason = 'converged'
            break
        previous = distance

    return FixedPoint(current, start_distance / (1 - L), trace, L, start_distance)


def estimate_contraction(J: Callable[[Map], Map], samples: Sequence[Tuple[Map, Map]], weight: Weight, window: Sequence[Element]) -> float:
    """max over sample pairs of d(Ju, Jv) / d(u, v)"""
    if len(samples) < 3:
        raise ConfigurationError([f'contraction estimate needs at least 3 sample pairs, got {len(samples)}'])
    observed = []
    for u, v in samples:
        before = generalized_metric(u, v, weight, window)
        if before.value == 0 or not before.finite:
            continue
        after = generalized_metric(J(u), J(v), weight, window)
        observed.append(after.value / before.value)
    if not observed:
        raise DegenerateSample()
    return max(observed)


def offset_start(f0: Map, weight: Weight, amount: float=0.5, spec: AlgebraSpec=None) -> FunctionMap:
    """g0 = f0 + amount * weight * 1_B, so that d(f0, g0) = amount where weight is finite"""
    spec = spec or getattr(f0, 'spec', None) or AlgebraSpec()

    def shifted(y: Element) -> Any:
        w = weight(y)
        return f0(y) + (amount * w if math.isfinite(w) else 0.0)
    return FunctionMap('g0', shifted, spec)


def uniqueness_check(J: IterationOperator, f0: Map, weight: Weight, window: Sequence[Element], tol: float, max_steps: int=200, first: FixedPoint=None) -> GeneralizedDistance:
    """Distance between the limits reached from f0 and from a shifted second start"""
    spec = getattr(f0, 'spec', None) or AlgebraSpec()
    first = first or iterate_to_fixed_point(J, f0, weight, window, tol, max_steps, spec)
    second = iterate_to_fixed_point(J, offset_start(f0, weight, spec=spec), weight, window, tol, max_steps, spec)
    return generalized_metric(first.solution, second.solution, weight, window, roundoff=True)
