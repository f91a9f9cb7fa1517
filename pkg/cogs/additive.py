from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ext.algebra import AlgebraSpec, AlgebraValue
from ext.errors import DomainRangeError, HypothesisViolation, PreconditionViolation, RepresentabilityError
from ext.expression import Expression
from ext.functions import ControlFunction, Defect, FunctionMap, Map, derive_pexider_additive_controls, sup_defect
from ext.report import Verdict
from ext.scenario import Cog, ScenarioContext, scenario
from ext.semigroup import Element, SemigroupDomain, Window
from ext.utility import fit_limit, limit_is_zero, partial_sums, ratio_test, within

from cogs.exponential import NMember, NSetReport, Stabilization, check_domination, gap, monotonicity_margin, run_stabilizer

logger = logging.getLogger('ulamlab.cogs.additive')

RHO = ('rho1', 'rho2', 'rho3', 'custom')


def pexider_residual(f: Map, g: Map, h: Map, domain: SemigroupDomain) -> Callable[[Element, Element], Tuple[AlgebraValue, AlgebraValue]]:
    """(f(x+y), g(x) + h(y))"""
    return lambda x, y: (f(domain.op(x, y)), g(x) + h(y))


def compute_defect_additive(f: Map, g: Map, h: Map, window: Window, domain: SemigroupDomain) -> Defect:
    """sup over window pairs of ||f(x+y) - g(x) - h(y)||"""
    return sup_defect(lambda x, y: f(domain.op(x, y)) - g(x) - h(y), window.pairs())


def additivity_violation(residual: Callable[[Element, Element], Tuple[AlgebraValue, AlgebraValue]], pairs: Iterable[Tuple[Element, Element]], tol: float) -> Tuple[float, Optional[Tuple[Element, Element]]]:
    """Largest residual over ``pairs`` and the first pair exceeding tol, if any"""
    worst = 0.0
    for x, y in pairs:
        try:
            lhs, rhs = residual(x, y)
        except DomainRangeError:
            continue
        size, magnitude = gap(lhs, rhs)
        worst = max(worst, size)
        if not within(size, tol, magnitude):
            return size, (x, y)
    return worst, None


@dataclass(frozen=True)
class BasePair:
    x0: Element
    y0: Element
    x: Element
    y: Element

    def __str__(self) -> str:
        return f'x0={self.x0!r} y0={self.y0!r} x={self.x!r} y={self.y!r}'


def default_base_pairs(window: Window, domain: SemigroupDomain) -> List[BasePair]:
    """x0 = y0 = the smallest nonzero element; x, y from the first, middle and last elements"""
    nonzero = [e for e in window if domain.magnitude(e) > 0 and e != domain.identity]
    if not nonzero:
        raise PreconditionViolation('window holds an element other than the identity')
    x0 = min(nonzero, key=lambda e: (domain.magnitude(e), e))
    picks = [nonzero[0], nonzero[len(nonzero) // 2], nonzero[-1]]
    return [BasePair(x0, x0, x, y) for x, y in zip(picks, picks[1:] + picks[:1])]


@dataclass
class ConditionSequence:
    """One Cesaro sequence with its fitted limit"""
    condition: str
    base: BasePair
    values: List[float]
    limit: float
    tail_mean: float
    met: bool
    truncated_at: Optional[int] = None
    overflowed: bool = False

    def summary(self) -> Dict[str, Any]:
        return {
            'condition': self.condition,
            'base': str(self.base),
            'terms': len(self.values),
            'first': self.values[0] if self.values else None,
            'limit': self.limit,
            'tail_mean': self.tail_mean,
            'met': self.met,
            'truncated_at': self.truncated_at,
            'overflowed': self.overflowed,
        }


@dataclass
class HyperstabilityConditionReport:
    control: str
    sequences: List[ConditionSequence] = field(default_factory=list)

    @property
    def met(self) -> bool:
        return all(s.met for s in self.sequences)

    @property
    def offending(self) -> Optional[ConditionSequence]:
        return next((s for s in self.sequences if not s.met), None)

    @property
    def verdict(self) -> Verdict:
        return Verdict.CONDITIONS_MET if self.met else Verdict.CONDITIONS_NOT_MET

    def rows(self) -> List[Dict[str, Any]]:
        return [s.summary() for s in self.sequences]

    def sequence_rows(self) -> List[Dict[str, Any]]:
        return [
            {'condition': s.condition, 'base': str(s.base), 'n': n, 'average': v}
            for s in self.sequences for n, v in enumerate(s.values, 1)
        ]

    def to_json(self) -> Dict[str, Any]:
        offending = self.offending
        return {
            'control': self.control,
            'verdict': self.verdict,
            'limits': self.rows(),
            'offending': offending.summary() if offending else None,
        }


def _cesaro(condition: str, base: BasePair, terms: Callable[[int], float], n_max: int, tail_tol: float, cumulative: bool) -> ConditionSequence:
    values: List[float] = []
    total = 0.0
    truncated = None
    overflowed = False
    for n in range(1, n_max + 1):
        try:
            term = terms(n - 1 if cumulative else n)
        except DomainRangeError:
            truncated = n - 1
            break
        if not math.isfinite(term):
            overflowed = True
            break
        total = total + term if cumulative else term
        values.append(total / n)

    if overflowed or not values:
        return ConditionSequence(condition, base, values, math.inf, math.inf, False, truncated, overflowed)
    limit, mean = fit_limit(values)
    met = limit_is_zero(limit, tail_tol, values[0], len(values))
    return ConditionSequence(condition, base, values, limit, mean, met, truncated)


def check_hyperstability_conditions(psi: ControlFunction, base_pairs: Sequence[BasePair], domain: SemigroupDomain, n_max: int=512, tail_tol: float=1e-6) -> HyperstabilityConditionReport:
    """Evaluates (1/n) sum psi(x + i x0, x0) and (1/n) psi(x + n x0, y + n y0) up to n_max"""
    if n_max < 64:
        raise PreconditionViolation('n_max >= 64', n_max)
    if not base_pairs:
        raise PreconditionViolation('at least one base pair')
    report = HyperstabilityConditionReport(psi.source or psi.name)
    for base in base_pairs:
        if base.x0 == domain.identity:
            raise PreconditionViolation('x0 is not the identity', str(base))

        def first(i: int, base: BasePair=base) -> float:
            return psi(domain.orbit(base.x, base.x0, i), base.x0)

        def second(n: int, base: BasePair=base) -> float:
            return psi(domain.orbit(base.x, base.x0, n), domain.orbit(base.y, base.y0, n))

        report.sequences.append(_cesaro('i', base, first, n_max, tail_tol, cumulative=True))
        report.sequences.append(_cesaro('ii', base, second, n_max, tail_tol, cumulative=False))
    logger.debug(f'conditions for {report.control}: {report.verdict}')
    return report


def hyperstability_verdict(f: Map, psi: ControlFunction, report: HyperstabilityConditionReport, window: Window, domain: SemigroupDomain, tol: float) -> Tuple[Verdict, Any]:
    """With the conditions met, f dominated by psi must be additive on the window"""
    if not report.met:
        return report.verdict, report.offending.summary() if report.offending else None
    residual = pexider_residual(f, f, f, domain)
    check_domination(residual, psi, window.pairs())
    worst, pair = additivity_violation(residual, window.pairs(), tol)
    if pair is not None:
        return Verdict.VIOLATION, {'pair': pair, 'defect': worst}
    return Verdict.HYPERSTABLE, None


@dataclass
class SuperstabilityResult:
    verdict: Verdict
    series: List[Dict[str, Any]]
    stabilizer: Optional[Stabilization] = None
    exp_domination: float = 0.0
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'series_terms': len(self.series),
            'series_sum': self.series[-1]['partial_sum'] if self.series else 0.0,
            'exp_domination_ratio': self.exp_domination,
            'stabilizer': self.stabilizer.to_json() if self.stabilizer else None,
            'witness': self.witness,
        }


def _safe_exp(value: float) -> float:
    try:
        return math.exp(value)
    except OverflowError:
        return math.inf


def phi_series(phi: ControlFunction, p: Element, domain: SemigroupDomain, depth: int) -> List[Dict[str, Any]]:
    """Terms phi(p, p^(m+1)) for m < depth while p^(m+1) stays in the domain"""
    rows = []
    terms = []
    for m in range(depth):
        try:
            term = phi(p, domain.pow(p, m + 1))
        except DomainRangeError:
            break
        terms.append(term)
        rows.append({'m': m, 'term': term})
    for row, total in zip(rows, partial_sums(terms)):
        row['partial_sum'] = total
    return rows


def check_additive_superstability(f: Map, phi: ControlFunction, psi: ControlFunction, p: Element, window: Window, domain: SemigroupDomain, tol: float, depth: int=512, max_steps: int=200) -> SuperstabilityResult:
    """Certifies f additive through the exp reduction E = exp(f).

    Hypotheses are checked in order and the first failure raises
    HypothesisViolation naming it.
    """
    fp = f(p).components[0]
    if not fp.real > 0:
        raise PreconditionViolation('Re f(p) > 0', repr(p), {'f(p)': fp})

    for x in window:
        size, bound = f(x).norm(), psi(x)
        if not within(size, bound, size):
            raise HypothesisViolation('|f| <= psi', repr(x), {'|f|': size, 'psi': bound})
    check_domination(pexider_residual(f, f, f, domain), phi, window.pairs())
    for x in window:
        try:
            shifted = psi(domain.op(x, p))
        except DomainRangeError:
            continue
        if not within(shifted, psi(x), psi(x)):
            raise HypothesisViolation('psi(x.p) <= psi(x)', repr(x), {'psi(x.p)': shifted, 'psi(x)': psi(x)})

    series = phi_series(phi, p, domain, depth)
    converges, worst = ratio_test([r['term'] for r in series])
    if not converges:
        raise HypothesisViolation('sum phi(p, p^(m+1)) converges', repr(p), {'worst_ratio': worst, 'terms': len(series)})

    spec = getattr(f, 'spec', None) or AlgebraSpec()
    E = FunctionMap('exp(f)', lambda x: f(x).exp(), spec)
    phi_hat = ControlFunction('phi^', 2, lambda x, y: _safe_exp(psi(domain.op(x, y))) + _safe_exp(psi(x) + psi(y)), f'exp(psi(x.y)) + exp(psi(x) + psi(y))')

    result = SuperstabilityResult(Verdict.CAUCHY, series)
    for x, y in window.pairs():
        size, magnitude = gap(E(domain.op(x, y)), E(x) * E(y))
        allowed = phi_hat(x, y)
        result.exp_domination = max(result.exp_domination, size / allowed if allowed else 0.0)
        if not within(size, allowed, magnitude):
            raise HypothesisViolation('exp(f) defect dominated by phi^', (repr(x), repr(y)), {'defect': size, 'phi^': allowed})

    margin, increasing = monotonicity_margin(phi_hat, p, window, domain)
    if increasing is not None:
        raise HypothesisViolation('phi^(x, y.p) <= phi^(x, y)', [repr(e) for e in increasing])
    lift = E(p).components[0]
    nset = NSetReport([NMember(p, lift, margin)], checked=1)
    result.stabilizer = run_stabilizer(E, E, phi_hat, nset, window, domain, tol, max_steps, spec)

    T = result.stabilizer.solution
    if T(p).norm() <= tol:
        result.verdict, result.witness = Verdict.VIOLATION, {'check': 'T(p) != 0', 'p': p}
        return result
    if not result.stabilizer.certified:
        result.verdict, result.witness = Verdict.VIOLATION, result.stabilizer.violations[0]
        return result

    worst, pair = additivity_violation(pexider_residual(f, f, f, domain), window.pairs(), tol)
    if pair is not None:
        result.verdict, result.witness = Verdict.VIOLATION, {'pair': pair, 'defect': worst}
    return result


def negated(f: Map, spec: AlgebraSpec) -> FunctionMap:
    return FunctionMap(f'-{getattr(f, "name", "f")}', lambda x: -f(x), spec)


def check_logarithmic(L: Map, phi: ControlFunction, psi: ControlFunction, p: Element, window: Window, domain: SemigroupDomain, tol: float, depth: int=512, max_steps: int=200) -> SuperstabilityResult:
    """Runs the additive superstability check on L, or on -L when L(p) < 0"""
    value = L(p).components[0]
    if value == 0 or value.imag != 0:
        raise PreconditionViolation('L(p) is a nonzero real', repr(p), {'L(p)': value})
    spec = getattr(L, 'spec', None) or AlgebraSpec()
    f = L if value.real > 0 else negated(L, spec)
    result = check_additive_superstability(f, phi, psi, p, window, domain, tol, depth, max_steps)
    if result.verdict == Verdict.CAUCHY:
        result.verdict = Verdict.LOGARITHMIC
    return result


def rho_function(choice: str, domain: SemigroupDomain, custom: Optional[Expression]=None) -> Callable[[Element, Element], float]:
    """The radius functions rho1 = |x|+|y|, rho2 = |x+y| and rho3 = max(|x|,|y|)"""
    def magnitude_of_sum(x: Element, y: Element) -> float:
        if domain.kind == 'vector-naturals-k':
            return math.sqrt(sum((a + b) ** 2 for a, b in zip(x.coords, y.coords)))
        return abs(domain.scalar(x) + domain.scalar(y))

    if choice == 'rho1':
        return lambda x, y: domain.magnitude(x) + domain.magnitude(y)
    if choice == 'rho2':
        return magnitude_of_sum
    if choice == 'rho3':
        return lambda x, y: max(domain.magnitude(x), domain.magnitude(y))
    if choice == 'custom' and custom is not None:
        return lambda x, y: custom.real({**domain.variables(x, 'x'), **domain.variables(y, 'y')})
    raise PreconditionViolation(f'rho choice in {RHO}', choice)


@dataclass
class AsymptoticScanProfile:
    rho: str
    radii: List[float]
    rows: List[Dict[str, Any]] = field(default_factory=list)
    anchors: List[Element] = field(default_factory=list)
    sampled: int = 0

    @property
    def tail(self) -> Dict[str, Any]:
        return self.rows[-1]

    def to_json(self) -> Dict[str, Any]:
        return {'rho': self.rho, 'radii': self.radii, 'anchors': self.anchors, 'pairs_sampled': self.sampled, 'tail': self.tail}


@dataclass
class AsymptoticResult:
    verdict: Verdict
    profile: AsymptoticScanProfile
    conditions: Optional[HyperstabilityConditionReport] = None
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'profile': self.profile.to_json(),
            'conditions': self.conditions.to_json() if self.conditions else None,
            'witness': self.witness,
        }


def _pair_values(pair: Optional[Tuple[Element, Element]], domain: SemigroupDomain) -> Any:
    return None if pair is None else tuple(domain.value(e) for e in pair)


def ray_pairs(window: Window, domain: SemigroupDomain, anchors: int=3) -> Tuple[List[Element], List[Tuple[Element, Element]]]:
    """Pairs with one coordinate fixed at a smallest-magnitude anchor"""
    ordered = sorted(window, key=lambda e: (domain.magnitude(e), e))
    fixed = ordered[:anchors]
    rays = [(x, a) for a in fixed for x in window] + [(a, y) for a in fixed for y in window]
    return fixed, rays


def asymptotic_scan(f: Map, g: Map, h: Map, rho: Callable[[Element, Element], float], window: Window, domain: SemigroupDomain, tol: float, radii: Optional[Sequence[float]]=None, rho_name: str='rho1',
                    n_max: int=512, tail_tol: float=1e-6, base_pairs: Optional[Sequence[BasePair]]=None) -> AsymptoticResult:
    """Profile of sup ||f(x+y) - g(x) - h(y)|| over pairs with rho(x,y) >= r.

    With the profile below tol at the largest radius, the pointwise defect
    is fed back as a control to the hyperstability conditions, and exact
    additivity is asserted on the window when they hold.
    """
    anchors, rays = ray_pairs(window, domain)
    on_ray = set(rays)
    pairs = list(dict.fromkeys(list(window.pairs()) + rays))

    samples = []
    for x, y in pairs:
        try:
            lhs, rhs = f(domain.op(x, y)), g(x) + h(y)
        except DomainRangeError:
            continue
        size, magnitude = gap(lhs, rhs)
        samples.append((rho(x, y), size, magnitude, (x, y)))

    if radii is None:
        reach = max(rho(x, y) for x, y in rays)
        radii = [float(r) for r in np.linspace(0.0, reach, 8)]
    if any(b <= a for a, b in zip(radii, radii[1:])):
        raise PreconditionViolation('radii increasing', list(radii))

    profile = AsymptoticScanProfile(rho_name, list(radii), anchors=anchors, sampled=len(samples))
    for r in radii:
        attributed = [s for s in samples if s[0] >= r]
        _, size, magnitude, pair = max(attributed, key=lambda s: s[1], default=(r, 0.0, 0.0, None))
        profile.rows.append({
            'radius': r,
            'sup_defect': size,
            'magnitude': magnitude,
            'pairs': len(attributed),
            'witness': _pair_values(pair, domain),
            'on_ray': pair in on_ray if pair is not None else None,
        })

    tail = profile.tail
    if not within(tail['sup_defect'], tol, tail['magnitude']):
        start = len(profile.rows) - 1
        while start > 0 and not within(profile.rows[start - 1]['sup_defect'], tol, profile.rows[start - 1]['magnitude']):
            start -= 1
        stall_from = profile.rows[start]['radius']
        stalled = [s for s in samples if s[0] >= stall_from and s[3] in on_ray and not within(s[1], tol, s[2])]
        if stalled:
            radius, size, _, pair = max(stalled, key=lambda s: (s[1], s[0]))
            witness = {'radius': radius, 'pair': _pair_values(pair, domain), 'on_ray': True, 'defect': size}
        else:
            witness = {'radius': tail['radius'], 'pair': tail['witness'], 'on_ray': tail['on_ray'], 'defect': tail['sup_defect']}
        return AsymptoticResult(Verdict.NOT_ASYMPTOTIC, profile, witness=witness)

    defect = ControlFunction('defect', 2, lambda x, y: (f(domain.op(x, y)) - g(x) - h(y)).norm(), 'pointwise defect')
    conditions = check_hyperstability_conditions(defect, base_pairs or default_base_pairs(window, domain), domain, n_max, tail_tol)
    if not conditions.met:
        return AsymptoticResult(Verdict.ASYMPTOTIC, profile, conditions)
    worst, pair = additivity_violation(pexider_residual(f, g, h, domain), window.pairs(), tol)
    if pair is not None:
        return AsymptoticResult(Verdict.VIOLATION, profile, conditions, {'pair': pair, 'defect': worst})
    return AsymptoticResult(Verdict.ADDITIVE, profile, conditions)


@dataclass
class PexiderAdditiveResult:
    verdict: Verdict
    tilde: HyperstabilityConditionReport
    combined: HyperstabilityConditionReport
    residuals: Dict[str, float] = field(default_factory=dict)
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        return {'verdict': self.verdict, 'psi~': self.tilde.to_json(), 'psi~+psi^': self.combined.to_json(), 'residuals': self.residuals, 'witness': self.witness}


def stabilize_pexider_additive(f: Map, g: Map, h: Map, psi: ControlFunction, window: Window, domain: SemigroupDomain, tol: float, n_max: int=512, tail_tol: float=1e-6,
                               base_pairs: Optional[Sequence[BasePair]]=None) -> PexiderAdditiveResult:
    """Hyperstability of f(x+y) = g(x) + h(y) on a monoid through psi~ and psi~ + psi^"""
    e = domain.identity
    if e is None or not domain.contains(e):
        raise PreconditionViolation('domain has an identity')
    for name, fn in (('g', g), ('h', h)):
        if fn(e).norm() > 1e-12:
            raise PreconditionViolation(f'{name}(e) = 0', repr(e), {f'|{name}(e)|': fn(e).norm()})
    residual = pexider_residual(f, g, h, domain)
    check_domination(residual, psi, window.pairs())

    tilde, hat = derive_pexider_additive_controls(psi, e, domain)
    pairs = base_pairs or default_base_pairs(window, domain)
    tilde_report = check_hyperstability_conditions(tilde, pairs, domain, n_max, tail_tol)
    combined_report = check_hyperstability_conditions(tilde + hat, pairs, domain, n_max, tail_tol)
    result = PexiderAdditiveResult(Verdict.PEXIDER, tilde_report, combined_report)

    for report in (tilde_report, combined_report):
        if not report.met:
            result.verdict = Verdict.CONDITIONS_NOT_MET
            result.witness = {'control': report.control, **report.offending.summary()} if report.offending else None
            return result

    checks = [('f additive', pexider_residual(f, f, f, domain)), ('g additive', pexider_residual(g, g, g, domain)),
              ('h additive', pexider_residual(h, h, h, domain)), ('f(x+y) = g(x) + h(y)', residual)]
    for name, check in checks:
        worst, pair = additivity_violation(check, window.pairs(), tol)
        result.residuals[name] = worst
        if pair is not None:
            result.verdict = Verdict.VIOLATION
            result.witness = {'check': name, 'pair': pair, 'residual': worst}
            return result
    return result


@dataclass
class JensenReduction:
    f: FunctionMap
    g: Map
    h: Map
    table: List[Dict[str, Any]] = field(default_factory=list)
    unrepresentable: int = 0

    @property
    def exact(self) -> bool:
        return all(row['equal'] for row in self.table)

    @property
    def sup(self) -> float:
        return max((row['defect'] for row in self.table), default=0.0)


def midpoint(x: Element, y: Element, domain: SemigroupDomain) -> Element:
    """(x + y)/2 taken on values and mapped back onto the grid"""
    if domain.kind in ('integers-mod-m', 'reals-positive-mul-grid'):
        raise RepresentabilityError(f'({domain.value(x)} + {domain.value(y)})/2', domain)
    a, b = domain.value(x), domain.value(y)
    if isinstance(a, tuple):
        return domain.from_value(tuple(Fraction(s + t, 2) for s, t in zip(a, b)))
    return domain.from_value((Fraction(a) + Fraction(b)) / 2)


def jensen_reduction(J: Map, window: Window, domain: SemigroupDomain) -> JensenReduction:
    """f(x) = 2 J(x/2) and g = h = J, so 2J((x+y)/2) - J(x) - J(y) = f(x+y) - g(x) - h(y).

    The Jensen side takes the midpoint on values, the Pexider side halves
    x + y inside f, and the table records both.
    """
    e = domain.identity
    if e is None or J(e).norm() > 1e-12:
        raise PreconditionViolation('J(0) = 0', repr(e))
    spec = getattr(J, 'spec', None) or AlgebraSpec()
    f = FunctionMap('2J(x/2)', lambda x: 2 * J(domain.halve(x)), spec)
    reduction = JensenReduction(f, J, J)

    for x, y in window.pairs():
        try:
            jensen = 2 * J(midpoint(x, y, domain)) - J(x) - J(y)
            pexider = f(domain.op(x, y)) - reduction.g(x) - reduction.h(y)
        except (RepresentabilityError, DomainRangeError):
            reduction.unrepresentable += 1
            continue
        reduction.table.append({
            'x': x,
            'y': y,
            'jensen': jensen.components[0] if jensen.spec.dimension == 1 else jensen,
            'pexider': pexider.components[0] if pexider.spec.dimension == 1 else pexider,
            'equal': jensen.components == pexider.components,
            'defect': jensen.norm(),
        })
    return reduction


class Additive(Cog):
    """Superstability, hyperstability and asymptotics of Cauchy's additive equation"""

    def _triple(self, ctx: ScenarioContext) -> Tuple[Map, Map, Map]:
        f = ctx.function('f')
        g = ctx.function('g') if ctx.has_function('g') else f
        h = ctx.function('h') if ctx.has_function('h') else g
        return f, g, h

    def _base_pairs(self, ctx: ScenarioContext) -> Optional[List[BasePair]]:
        raw = ctx.options.get('base_pairs')
        if not raw:
            return None
        return [BasePair(*(ctx.element(v) for v in (r['x0'], r.get('y0', r['x0']), r['x'], r['y']))) for r in raw]

    @scenario('additive.defect', anchor='Pexider additive defect', description='sup of ||f(x+y) - g(x) - h(y)|| over window pairs', requires=('functions.f',))
    def defect(self, ctx: ScenarioContext) -> Verdict:
        f, g, h = self._triple(ctx)
        ctx.report.details['defect'] = compute_defect_additive(f, g, h, ctx.window, ctx.domain)
        return Verdict.DEFECT

    @scenario('additive.hyperstability', anchor='hyperstability of the additive equation', description='Cesaro limit conditions on psi, then exact additivity of f', requires=('controls.psi',))
    def hyperstability(self, ctx: ScenarioContext) -> Verdict:
        psi = ctx.control('psi', 2)
        tolerances = ctx.tolerances
        pairs = self._base_pairs(ctx) or default_base_pairs(ctx.window, ctx.domain)
        report = check_hyperstability_conditions(psi, pairs, ctx.domain, int(tolerances.n_max), float(tolerances.tail_tol))
        ctx.report.details['conditions'] = report
        ctx.report.conditions['limits'] = report.rows()
        ctx.report.conditions['cesaro'] = report.sequence_rows()

        offending = report.offending
        if offending is not None and offending.condition == 'i' and offending.limit > 0:
            ctx.report.note('psi(x + i x0, x0) keeps its second argument fixed, so a term of psi in y alone leaves a nonzero Cesaro limit')
        if not ctx.has_function('f'):
            if offending is not None:
                ctx.report.witness = offending.summary()
            return report.verdict
        verdict, witness = hyperstability_verdict(ctx.function('f'), psi, report, ctx.window, ctx.domain, ctx.tol)
        ctx.report.witness = witness
        return verdict

    @scenario('additive.superstability', anchor='exp reduction of the additive equation', description='Cauchy certification through E = exp(f)', requires=('functions.f', 'controls.phi', 'controls.psi', 'options.p'))
    def superstability(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        result = check_additive_superstability(f, ctx.control('phi', 2), ctx.control('psi', 1), ctx.element_option('p'), ctx.window, ctx.domain, ctx.tol, int(ctx.tolerances.n_max), ctx.max_steps)
        return self._superstability_report(ctx, result)

    @scenario('additive.logarithmic', anchor='logarithmic superstability', description='L is Cauchy or logarithmic, via f = L or -L', requires=('functions.L', 'controls.phi', 'controls.psi', 'options.p'))
    def logarithmic(self, ctx: ScenarioContext) -> Verdict:
        L = ctx.function('L')
        result = check_logarithmic(L, ctx.control('phi', 2), ctx.control('psi', 1), ctx.element_option('p'), ctx.window, ctx.domain, ctx.tol, int(ctx.tolerances.n_max), ctx.max_steps)
        return self._superstability_report(ctx, result)

    def _superstability_report(self, ctx: ScenarioContext, result: SuperstabilityResult) -> Verdict:
        ctx.report.details['superstability'] = result
        ctx.report.conditions['phi_series'] = result.series
        if result.stabilizer is not None:
            ctx.report.bound_profile = result.stabilizer.profile
            for a, fp in result.stabilizer.runs.items():
                ctx.report.traces[ctx.trace_name('T', a)] = fp.trace
        ctx.report.witness = result.witness
        return result.verdict

    @scenario('additive.asymptotic', anchor='Skof asymptotic additivity', description='defect profile as rho(x,y) grows, with fixed-coordinate rays', requires=('functions.f',), expressions={'custom_rho': 2})
    def asymptotic(self, ctx: ScenarioContext) -> Verdict:
        f, g, h = self._triple(ctx)
        choice = ctx.options.get('rho', 'rho1')
        custom = ctx.expression(ctx.options.custom_rho, 2) if choice == 'custom' else None
        rho = rho_function(choice, ctx.domain, custom)
        radii = ctx.options.get('radii')
        tolerances = ctx.tolerances
        result = asymptotic_scan(f, g, h, rho, ctx.window, ctx.domain, ctx.tol, list(radii) if radii else None, choice,
                                 int(tolerances.n_max), float(tolerances.tail_tol), self._base_pairs(ctx))
        ctx.report.details['asymptotic'] = result
        ctx.report.conditions['profile'] = result.profile.rows
        if result.conditions is not None:
            ctx.report.conditions['limits'] = result.conditions.rows()
        ctx.report.witness = result.witness
        return result.verdict

    @scenario('additive.pexider', anchor='Pexider additive hyperstability', description='f, g, h additive and f(x+y) = g(x) + h(y) from psi~ and psi^', requires=('functions.f', 'controls.psi'))
    def pexider(self, ctx: ScenarioContext) -> Verdict:
        f, g, h = self._triple(ctx)
        tolerances = ctx.tolerances
        result = stabilize_pexider_additive(f, g, h, ctx.control('psi', 2), ctx.window, ctx.domain, ctx.tol, int(tolerances.n_max), float(tolerances.tail_tol), self._base_pairs(ctx))
        ctx.report.details['pexider'] = result
        ctx.report.conditions['limits_tilde'] = result.tilde.rows()
        ctx.report.conditions['limits_combined'] = result.combined.rows()
        if result.verdict == Verdict.CONDITIONS_NOT_MET:
            ctx.report.note('the Pexider hyperstability conclusion is not available for this control')
        ctx.report.witness = result.witness
        return result.verdict

    @scenario('additive.jensen', anchor='Jensen reduction', description='2J((x+y)/2) - J(x) - J(y) as the Pexider defect of (2J(x/2), J, J)', requires=('functions.J',))
    def jensen(self, ctx: ScenarioContext) -> Verdict:
        reduction = jensen_reduction(ctx.function('J'), ctx.window, ctx.domain)
        defect = compute_defect_additive(reduction.f, reduction.g, reduction.h, ctx.window, ctx.domain) if not reduction.unrepresentable else None
        ctx.report.conditions['identity'] = reduction.table
        ctx.report.details.update(representable_pairs=len(reduction.table), unrepresentable_pairs=reduction.unrepresentable, pexider_defect=defect)
        if not reduction.table:
            raise PreconditionViolation('some window pair has a representable midpoint')
        if not reduction.exact:
            ctx.report.witness = next(row for row in reduction.table if not row['equal'])
            return Verdict.VIOLATION
        if defect is not None and not math.isclose(defect.value, reduction.sup, rel_tol=1e-12, abs_tol=1e-12):
            ctx.report.witness = {'check': 'sup of the Pexider defect', 'pexider': defect.value, 'jensen': reduction.sup}
            return Verdict.VIOLATION
        return Verdict.IDENTITY


def setup(lab: Any) -> None:
    lab.add_cog(Additive(lab))
