from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from ext.algebra import OVERFLOW, ROUNDOFF, AlgebraSpec, AlgebraValue, hat_lift, in_M, sup_norm
from ext.errors import (ConfigurationError, DomainRangeError, EngineInconsistency, HypothesisViolation, NotConverged,
                        PreconditionViolation, WindowExhausted)
from ext.fixedpoint import FixedPoint, IterationOperator, iterate_to_fixed_point, uniqueness_check
from ext.functions import ControlFunction, Defect, FunctionMap, Map, derive_pexider_exponential_controls, sup_defect
from ext.report import Verdict
from ext.scenario import Cog, ScenarioContext, scenario
from ext.semigroup import Element, SemigroupDomain, Window
from ext.utility import grows_unboundedly, within

logger = logging.getLogger('ulamlab.cogs.exponential')

# slack allowed on the N-set monotonicity test, relative to max(1, psi)
MONOTONE_SLACK = 1e-12

ORACLE_BUDGET = 10 ** 7


def gap(u: AlgebraValue, v: AlgebraValue) -> Tuple[float, float]:
    """||u - v|| and the magnitude of the compared terms"""
    return (u - v).norm(), max(u.norm(), v.norm())


def compute_defect_exponential(f: Map, g: Map, window: Window, domain: SemigroupDomain) -> Defect:
    """sup over window pairs of ||f(x.y) - g(x) f(y)||"""
    return sup_defect(lambda x, y: f(domain.op(x, y)) - g(x) * f(y), window.pairs())


def check_domination(residual: Callable[[Element, Element], Tuple[AlgebraValue, AlgebraValue]], control: ControlFunction, pairs: Sequence[Tuple[Element, Element]]) -> None:
    """Raises HypothesisViolation at the first pair whose defect exceeds the control"""
    for x, y in pairs:
        lhs, rhs = residual(x, y)
        size, magnitude = gap(lhs, rhs)
        allowed = control(x, y)
        if not within(size, allowed, magnitude):
            raise HypothesisViolation(f'defect dominated by {control.name}', (repr(x), repr(y)), {'defect': size, 'control': allowed})


@dataclass(frozen=True)
class NMember:
    element: Element
    lift: complex
    margin: float

    @property
    def modulus(self) -> float:
        return abs(self.lift)


@dataclass
class NSetReport:
    """Window elements a with |g^(a)| > 1 along which psi does not increase"""
    members: List[NMember] = field(default_factory=list)
    checked: int = 0
    small: List[Element] = field(default_factory=list)
    increasing: Dict[Element, Tuple[Element, Element]] = field(default_factory=dict)

    def __bool__(self) -> bool:
        return bool(self.members)

    def rows(self) -> List[Dict[str, Any]]:
        rows = [{'element': m.element, 'lift_modulus': m.modulus, 'margin': m.margin, 'member': True} for m in self.members]
        rows.extend({'element': a, 'lift_modulus': None, 'margin': None, 'member': False, 'reason': '|g(a)| <= 1'} for a in self.small)
        rows.extend({'element': a, 'lift_modulus': None, 'margin': None, 'member': False, 'reason': f'increasing at {pair}'} for a, pair in self.increasing.items())
        return sorted(rows, key=lambda r: r['element'])

    def to_json(self) -> Dict[str, Any]:
        return {
            'members': [repr(m.element) for m in self.members],
            'checked': self.checked,
            'fastest': repr(self.fastest.element) if self.members else None,
        }

    @property
    def fastest(self) -> NMember:
        return max(self.members, key=lambda m: (m.modulus, m.element))


def monotonicity_margin(psi: ControlFunction, a: Element, window: Window, domain: SemigroupDomain) -> Tuple[float, Optional[Tuple[Element, Element]]]:
    """min over window pairs of psi(x,y) - psi(x, y.a), and a pair where psi increases"""
    margin = math.inf
    for x, y in window.pairs():
        before = psi(x, y)
        if not math.isfinite(before):
            continue
        try:
            after = psi(x, domain.op(y, a))
        except DomainRangeError:
            continue
        margin = min(margin, before - after)
        if after - before > MONOTONE_SLACK * max(1.0, before):
            return margin, (x, y)
    return margin, None


def find_N_set(g: Map, psi: ControlFunction, window: Window, domain: SemigroupDomain) -> NSetReport:
    """N_{g^,psi} on the window, with g^ the unit lift (g itself on scalar codomains)"""
    report = NSetReport()
    for a in window:
        report.checked += 1
        lift = hat_lift(g, a)
        if not abs(lift) > 1:
            report.small.append(a)
            continue
        margin, increasing = monotonicity_margin(psi, a, window, domain)
        if increasing is not None:
            report.increasing[a] = increasing
            continue
        report.members.append(NMember(a, lift, margin))
    logger.debug(f'N-set has {len(report.members)} of {report.checked} window elements')
    return report


def baker_bound(eps: float) -> float:
    if eps < 0:
        raise PreconditionViolation('eps >= 0', eps)
    return (1 + math.sqrt(1 + 4 * eps)) / 2


def _shift_operator(domain: SemigroupDomain, a: Element, c: complex, spec: AlgebraSpec) -> Callable[[Map], Map]:
    """J(h)(y) = h(y.a) / c"""
    def apply(h: Map) -> Map:
        return FunctionMap(f'J{h!r}', lambda y: h(domain.op(y, a)) / c, spec)
    return apply


@dataclass
class Stabilization:
    """The outcome of a stabilizer run over an N-set"""
    solution: Map
    fastest: NMember
    runs: Dict[Element, FixedPoint]
    profile: List[Dict[str, Any]]
    agreement: float = 0.0
    uniqueness: float = 0.0
    identity_residual: float = 0.0
    triple_residual: float = 0.0
    skipped: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)
    dropped: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.violations

    def to_json(self) -> Dict[str, Any]:
        return {
            'fastest': repr(self.fastest.element),
            'lipschitz': 1 / self.fastest.modulus,
            'members_converged': [repr(a) for a in sorted(self.runs)],
            'members_dropped': self.dropped,
            'agreement': self.agreement,
            'uniqueness_distance': self.uniqueness,
            'identity_residual': self.identity_residual,
            'triple_residual': self.triple_residual,
            'pairs_skipped': self.skipped,
            'violations': self.violations,
        }


def run_stabilizer(f: Map, g: Map, psi: ControlFunction, nset: NSetReport, window: Window, domain: SemigroupDomain, tol: float, max_steps: int=200, spec: AlgebraSpec=None) -> Stabilization:
    """Runs T_a = lim f(y.a^n) / g^(a)^n for every N-set member and checks the conclusions.

    The limit of the member with the largest |g^(a)| is returned; every
    other member that converges must agree with it within 2 tol.
    """
    if not nset:
        raise HypothesisViolation(f'N-set of {psi.name} non-empty', None, {'checked': nset.checked})
    spec = spec or getattr(f, 'spec', None) or AlgebraSpec()
    fastest = nset.fastest
    runs: Dict[Element, FixedPoint] = {}
    dropped: List[Dict[str, Any]] = []
    operators: Dict[Element, Tuple[IterationOperator, Callable[[Element], float], float, int]] = {}

    for member in sorted(nset.members, key=lambda m: (-m.modulus, m.element)):
        a = member.element
        weight = psi.partial(a)
        J = IterationOperator(_shift_operator(domain, a, member.lift, spec), 1 / member.modulus, f'1/|g({a!r})|')
        scale = max([1.0] + [w for w in map(weight, window) if math.isfinite(w)])
        cap = min(max_steps, max(1, int(math.log10(OVERFLOW) / math.log10(member.modulus))))
        try:
            fp = iterate_to_fixed_point(J, f, weight, window.elements, tol / scale, cap, spec)
            if not fp.converged:
                raise NotConverged(fp.trace.stop_reason, fp.steps)
        except (NotConverged, WindowExhausted) as e:
            if member is fastest:
                raise
            logger.info(f'N-set member {a!r} dropped: {e}')
            dropped.append({'element': repr(a), 'reason': type(e).__name__, 'witness': e.witness})
            continue
        runs[a] = fp
        operators[a] = (J, weight, tol / scale, cap)

    solution = runs[fastest.element].solution
    result = Stabilization(solution, fastest, runs, [], dropped=dropped)

    for a, fp in runs.items():
        if a == fastest.element:
            continue
        for y in window:
            size, magnitude = gap(fp.solution(y), solution(y))
            result.agreement = max(result.agreement, size)
            if not within(size, 2 * tol, magnitude):
                raise EngineInconsistency((repr(a), repr(fastest.element), repr(y)), size)

    J, weight, tol_eff, cap = operators[fastest.element]
    result.uniqueness = uniqueness_check(J, f, weight, window.elements, tol_eff, cap, first=runs[fastest.element]).value
    if result.uniqueness > 2 * tol_eff:
        result.violations.append({'check': 'uniqueness', 'distance': result.uniqueness})

    def bound(y: Element) -> float:
        return min(psi(m.element, y) / (m.modulus - 1) for m in nset.members)

    for y in window:
        size, magnitude = gap(f(y), solution(y))
        b = bound(y)
        dominated = within(size, b + tol, magnitude)
        result.profile.append({'element': y, 'bound': b, 'observed': size, 'dominated': dominated})
        if not dominated:
            result.violations.append({'check': 'bound', 'element': y, 'observed': size, 'bound': b})

    for x, y in window.pairs():
        try:
            lhs, rhs = solution(domain.op(x, y)), g(x) * solution(y)
        except (DomainRangeError, WindowExhausted):
            result.skipped += 1
            continue
        size, magnitude = gap(lhs, rhs)
        allowed = tol * (1 + g(x).norm())
        result.identity_residual = max(result.identity_residual, size / allowed)
        if not within(size, allowed, magnitude):
            result.violations.append({'check': 'T(x.y) = g(x) T(y)', 'pair': (x, y), 'residual': size})
            break

    for x, y, z in window.triples():
        Tz = solution(z)
        if Tz.norm() <= tol:
            continue
        try:
            left, right = g(domain.op(x, y)) * Tz, g(x) * g(y) * Tz
        except DomainRangeError:
            result.skipped += 1
            continue
        size, magnitude = gap(left, right)
        allowed = tol * (Tz.norm() + 1)
        result.triple_residual = max(result.triple_residual, size / allowed)
        if not within(size, allowed, magnitude):
            result.violations.append({'check': '(g(x.y) - g(x) g(y)) T(z) = 0', 'triple': (x, y, z), 'residual': size})
            break

    return result


def stabilize_exponential(f: Map, g: Map, psi: ControlFunction, window: Window, domain: SemigroupDomain, tol: float, max_steps: int=200) -> Tuple[Stabilization, NSetReport]:
    check_domination(lambda x, y: (f(domain.op(x, y)), g(x) * f(y)), psi, window.pairs())
    nset = find_N_set(g, psi, window, domain)
    return run_stabilizer(f, g, psi, nset, window, domain, tol, max_steps), nset


def stabilize_exponential_algebra(f: Map, g: Map, psi: ControlFunction, window: Window, domain: SemigroupDomain, tol: float, max_steps: int=200) -> Tuple[Stabilization, NSetReport]:
    """The unit-lift stabilizer: divides by g^(a)^n, which is 1 off M_g"""
    check_domination(lambda x, y: (f(domain.op(x, y)), g(x) * f(y)), psi, window.pairs())
    nset = find_N_set(g, psi, window, domain)
    if not nset:
        lifted = [a for a in window if in_M(g, a)]
        raise HypothesisViolation(f'N-set of {psi.name} non-empty', None, {'M_g': [repr(a) for a in lifted], 'checked': nset.checked})
    return run_stabilizer(f, g, psi, nset, window, domain, tol, max_steps), nset


@dataclass
class DichotomyVerdict:
    verdict: Verdict
    bound: float
    sup_norm: float
    defect: Defect
    witness: Any = None

    def to_json(self) -> Dict[str, Any]:
        return {'verdict': self.verdict, 'baker_bound': self.bound, 'sup_norm': self.sup_norm, 'defect': self.defect.to_json(), 'witness': self.witness}


def dichotomy_check(f: Map, eps: float, window: Window, domain: SemigroupDomain, tol: float) -> DichotomyVerdict:
    """Bounded by baker_bound(eps), exponential within tol, or a witness that neither holds"""
    defect = compute_defect_exponential(f, f, window, domain)
    if not within(defect.value, eps, 1.0):
        raise PreconditionViolation('defect <= eps', [repr(e) for e in defect.pair or ()], {'defect': defect.value, 'eps': eps})
    bound = baker_bound(eps)
    largest = sup_norm(f, window)
    if largest.value <= bound + tol:
        return DichotomyVerdict(Verdict.BOUNDED, bound, largest.value, defect)
    if defect.value <= tol:
        return DichotomyVerdict(Verdict.EXPONENTIAL, bound, largest.value, defect)
    witness = {'x': defect.pair[0], 'y': defect.pair[1], 'unbounded_at': largest.witness}
    return DichotomyVerdict(Verdict.VIOLATION, bound, largest.value, defect, witness)


@dataclass
class OracleReport:
    modulus: int
    grid: List[complex]
    eps: float
    checked: int = 0
    admissible: int = 0
    violations: List[List[complex]] = field(default_factory=list)
    violation_count: int = 0
    analytic_radius: Optional[float] = None
    largest_admissible: float = 0.0
    survivors_exponential: Optional[bool] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            'm': self.modulus,
            'grid_size': len(self.grid),
            'eps': self.eps,
            'baker_bound': baker_bound(self.eps),
            'functions_checked': self.checked,
            'admissible': self.admissible,
            'violations': self.violation_count,
            'first_violations': self.violations,
            'analytic_radius': self.analytic_radius,
            'largest_admissible': self.largest_admissible,
            'radius_agrees': self.radius_agrees,
            'survivors_exponential': self.survivors_exponential,
        }

    @property
    def radius_agrees(self) -> Optional[bool]:
        """No admissible grid value lies beyond the analytic radius"""
        if self.analytic_radius is None:
            return None
        return self.largest_admissible <= self.analytic_radius * (1 + ROUNDOFF) + ROUNDOFF

    @property
    def summary(self) -> str:
        return f'functions checked: {self.checked}, violations: {self.violation_count}'


def _is_exponential(values: np.ndarray, m: int, tol: float) -> bool:
    """f: Z_m -> C with f(x+y) = f(x) f(y): the zero map or a character"""
    if np.all(np.abs(values) <= tol):
        return True
    if abs(values[0] - 1) > tol:
        return False
    if m == 1:
        return True
    powers = values[1] ** np.arange(m)
    return bool(np.all(np.abs(values - powers) <= tol) and abs(values[1] ** m - 1) <= tol)


def admissible_radius(eps: float) -> float:
    """Largest |z| with |z - z^2| <= eps, the positive root of r^2 - r - eps.

    |z| |1 - z| >= |z| (|z| - 1) with equality on the positive reals, so the
    radius is where r (r - 1) reaches eps.
    """
    roots = np.roots([1.0, -1.0, -eps])
    return float(max(r.real for r in roots if abs(r.imag) <= 1e-12))


def dichotomy_oracle(m: int, grid: Sequence[complex], eps: float, tol: float, chunk: int=1 << 16) -> OracleReport:
    """Enumerates every f: Z_m -> grid and checks the bounded-or-exponential dichotomy"""
    size = len(grid) ** m
    if m < 1 or not grid:
        raise ConfigurationError([f'oracle needs m >= 1 and a non-empty grid, got m={m} and {len(grid)} values'])
    if size > ORACLE_BUDGET:
        raise ConfigurationError([f'oracle enumeration of {len(grid)}^{m} = {size} functions exceeds the budget {ORACLE_BUDGET}'])

    report = OracleReport(m, list(grid), eps)
    bound = baker_bound(eps)
    values = np.asarray(grid, dtype=complex)
    sums = (np.arange(m)[:, None] + np.arange(m)[None, :]) % m
    digits = len(grid) ** np.arange(m)
    step = max(1, chunk // (m * m))
    survivors_ok = True

    for start in range(0, size, step):
        index = np.arange(start, min(size, start + step))
        F = values[(index[:, None] // digits) % len(grid)]
        defect = np.abs(F[:, sums] - F[:, :, None] * F[:, None, :]).max(axis=(1, 2))
        largest = np.abs(F).max(axis=1)
        admissible = defect <= eps + ROUNDOFF * (1 + largest ** 2)
        failing = admissible & ~((largest <= bound + tol) | (defect <= tol))

        report.checked += len(index)
        report.admissible += int(admissible.sum())
        if admissible.any():
            report.largest_admissible = max(report.largest_admissible, float(largest[admissible].max()))
        report.violation_count += int(failing.sum())
        for row in F[failing][:max(0, 20 - len(report.violations))]:
            report.violations.append([complex(v) for v in row])
        if eps == 0:
            survivors_ok = survivors_ok and all(_is_exponential(row, m, tol) for row in F[admissible])

    if eps == 0:
        report.survivors_exponential = survivors_ok
    if m == 1:
        report.analytic_radius = admissible_radius(eps)
        if report.largest_admissible > report.analytic_radius + tol:
            logger.warning(f'grid value {report.largest_admissible} passes beyond the radius {report.analytic_radius}')
    logger.debug(report.summary)
    return report


@dataclass
class PexiderStabilization:
    from_f: Stabilization
    from_h: Stabilization
    agreement: float
    comparison: List[Dict[str, Any]]
    homo5: Optional[Dict[str, Any]] = None

    def to_json(self) -> Dict[str, Any]:
        return {
            'from_f': self.from_f.to_json(),
            'from_h': self.from_h.to_json(),
            'agreement': self.agreement,
            'f_h_comparison_holds': all(r['dominated'] for r in self.comparison),
            'homo5': self.homo5,
        }


def stabilize_pexider_exponential(f: Map, g: Map, h: Map, psi: ControlFunction, x0: Element, window: Window, domain: SemigroupDomain, tol: float, max_steps: int=200, threshold: float=1e6) -> PexiderStabilization:
    """Stabilizes ||f(x.y) - g(x) h(y)|| <= psi through the derived controls psi~ and psi^"""
    check_domination(lambda x, y: (f(domain.op(x, y)), g(x) * h(y)), psi, window.pairs())
    tilde, hat = derive_pexider_exponential_controls(psi, g, x0, domain)

    nset = find_N_set(g, psi, window, domain)
    kept = []
    for member in nset.members:
        for derived in (tilde, hat):
            _, increasing = monotonicity_margin(derived, member.element, window, domain)
            if increasing is not None:
                logger.debug(f'{derived.name} increases along {member.element!r} at {increasing}')
                break
        else:
            kept.append(member)
    derived_nset = NSetReport(kept, nset.checked, nset.small, nset.increasing)

    from_f = run_stabilizer(f, g, tilde, derived_nset, window, domain, tol, max_steps)
    from_h = run_stabilizer(h, g, hat, derived_nset, window, domain, tol, max_steps)

    agreement = 0.0
    for y in window:
        size, magnitude = gap(from_f.solution(y), from_h.solution(y))
        agreement = max(agreement, size)
        if not within(size, 2 * tol, magnitude):
            raise EngineInconsistency(('T from f', 'T from h', repr(y)), size)

    comparison = []
    for y in window:
        size, magnitude = gap(f(y), h(y))
        allowed = psi(x0, y)
        comparison.append({'element': y, 'f_minus_h': size, 'psi_x0_y': allowed, 'dominated': within(size, allowed + tol, magnitude)})

    result = PexiderStabilization(from_f, from_h, agreement, comparison)

    inner, outer = window.outer_half(domain)
    norms = [g(e).norm() for e in inner + outer]
    if grows_unboundedly(norms, threshold):
        result.homo5 = _homo5_check(f, g, h, from_f.solution, window, domain, tol)
    return result


def _homo5_check(f: Map, g: Map, h: Map, T: Map, window: Window, domain: SemigroupDomain, tol: float) -> Dict[str, Any]:
    """With g unbounded, f = h = T and f(x) = f(e) g(x) on the window"""
    worst: Dict[str, float] = {'f = h': 0.0, 'f = T': 0.0, 'f(x) = f(e) g(x)': 0.0}
    witness: Dict[str, Any] = {}
    identity = domain.identity
    fe = f(identity) if identity is not None and domain.contains(identity) else None
    for y in window:
        checks = [('f = h', f(y), h(y)), ('f = T', f(y), T(y))]
        if fe is not None:
            checks.append(('f(x) = f(e) g(x)', f(y), fe * g(y)))
        for name, u, v in checks:
            size, magnitude = gap(u, v)
            ratio = size / (tol * max(1.0, magnitude))
            if ratio > worst[name]:
                worst[name] = ratio
                witness[name] = y
    holds = all(v <= 1 + ROUNDOFF / tol for v in worst.values())
    return {'holds': holds, 'relative_residuals': worst, 'witness': witness, 'identity_used': fe is not None}


def _report_stabilization(ctx: ScenarioContext, result: Stabilization, prefix: str='T') -> None:
    for a, fp in sorted(result.runs.items()):
        ctx.report.traces[ctx.trace_name(prefix, a)] = fp.trace
    if result.dropped:
        ctx.report.note(f'{len(result.dropped)} N-set members did not converge and were left out of the agreement check')
    if not ctx.report.bound_profile:
        ctx.report.bound_profile = result.profile
    else:
        for row, extra in zip(ctx.report.bound_profile, result.profile):
            row.update({f'{prefix}_{k}': v for k, v in extra.items() if k != 'element'})


def _verdict_for(ctx: ScenarioContext, result: Stabilization, success: Verdict) -> Verdict:
    if result.certified:
        return success
    ctx.report.witness = result.violations[0]
    return Verdict.VIOLATION


def grid_values(raw: Any) -> List[complex]:
    """Reads an oracle grid: {"re": [...], "im": [...]} or a list of [re, im] pairs"""
    if isinstance(raw, dict):
        return [complex(a, b) for a in raw.get('re', [0]) for b in raw.get('im', [0])]
    return [complex(*v) if isinstance(v, (list, tuple)) else complex(v) for v in raw]


class Exponential(Cog):
    """Stability of the exponential equation f(x.y) = g(x) f(y) and its variants"""

    @scenario('exponential.defect', anchor='exponential defect', description='sup of ||f(x.y) - g(x) f(y)|| over window pairs', requires=('functions.f',))
    def defect(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        g = ctx.function('g') if ctx.has_function('g') else f
        defect = compute_defect_exponential(f, g, ctx.window, ctx.domain)
        ctx.report.details['defect'] = defect
        if 'psi' in ctx.config.controls:
            psi = ctx.control('psi', 2)
            check_domination(lambda x, y: (f(ctx.domain.op(x, y)), g(x) * f(y)), psi, ctx.window.pairs())
            ctx.report.details['dominated_by'] = psi.source
        return Verdict.DEFECT

    @scenario('exponential.stabilize', anchor='Baker stabilizer on N-sets', description='construct T(y) = lim f(y.a^n)/g(a)^n over the N-set', requires=('functions.f', 'controls.psi'))
    def stabilize(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        g = ctx.function('g') if ctx.has_function('g') else f
        psi = ctx.control('psi', 2)
        result, nset = stabilize_exponential(f, g, psi, ctx.window, ctx.domain, ctx.tol, ctx.max_steps)
        ctx.report.conditions['n_set'] = nset.rows()
        ctx.report.details.update(n_set=nset, stabilizer=result)
        _report_stabilization(ctx, result)
        return _verdict_for(ctx, result, Verdict.HUR_STABLE)

    @scenario('exponential.algebra', anchor='unit-lift stabilizer in C^d', description='stabilizer dividing by the unit lift g^(a)^n', requires=('functions.f', 'controls.psi'))
    def algebra(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        g = ctx.function('g') if ctx.has_function('g') else f
        psi = ctx.control('psi', 2)
        try:
            result, nset = stabilize_exponential_algebra(f, g, psi, ctx.window, ctx.domain, ctx.tol, ctx.max_steps)
        except HypothesisViolation as e:
            if not e.details.get('M_g', True):
                ctx.report.note('M_g is empty on the window, so g^ is identically 1 and no element contracts')
            raise
        ctx.report.conditions['n_set'] = nset.rows()
        ctx.report.details.update(n_set=nset, stabilizer=result)
        _report_stabilization(ctx, result)
        return _verdict_for(ctx, result, Verdict.HUR_STABLE)

    @scenario('exponential.dichotomy', anchor='Baker superstability', description='bounded by (1+sqrt(1+4 eps))/2 or exponential', requires=('functions.f',))
    def dichotomy(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        eps = ctx.param('eps')
        if not ctx.algebra.multiplicative:
            ctx.report.note(f'the norm of {ctx.algebra.describe()} is not multiplicative, so the dichotomy is not guaranteed')
        outcome = dichotomy_check(f, eps, ctx.window, ctx.domain, ctx.tol)
        ctx.report.details['dichotomy'] = outcome
        ctx.report.note('the control is read as (1 + sqrt(1 + 4 eps))/2, the radius solving |z - z^2| = eps')

        # the constant-control stabilizer bound eps/(|f(a)| - 1)
        lifts = [abs(hat_lift(f, a)) for a in ctx.window]
        growing = [c for c in lifts if c > 1]
        if growing:
            ctx.report.details['stabilizer_bound'] = eps / (max(growing) - 1)
        if outcome.witness is not None:
            ctx.report.witness = outcome.witness
        return outcome.verdict

    @scenario('exponential.oracle', anchor='Baker superstability, exhaustive', description='enumerate every f: Z_m -> grid and check the dichotomy', requires=('options.m', 'options.grid'))
    def oracle(self, ctx: ScenarioContext) -> Verdict:
        m = int(ctx.options.m)
        report = dichotomy_oracle(m, grid_values(ctx.options.grid), ctx.param('eps'), ctx.tol)
        ctx.report.details['oracle'] = report
        ctx.report.note(report.summary)
        if report.violation_count:
            ctx.report.witness = report.violations[0]
            return Verdict.ORACLE_VIOLATIONS
        return Verdict.ORACLE_PASSED

    @scenario('exponential.pexider', anchor='Pexider exponential stability', description='stabilize ||f(x.y) - g(x) h(y)|| through psi~ and psi^', requires=('functions.f', 'functions.g', 'functions.h', 'controls.psi'))
    def pexider(self, ctx: ScenarioContext) -> Verdict:
        f, g, h = ctx.function('f'), ctx.function('g'), ctx.function('h')
        psi = ctx.control('psi', 2)
        x0 = ctx.element_option('x0', ctx.domain.identity)
        threshold = float(ctx.tolerances.unbounded_threshold)
        result = stabilize_pexider_exponential(f, g, h, psi, x0, ctx.window, ctx.domain, ctx.tol, ctx.max_steps, threshold)

        ctx.report.details['pexider'] = result
        ctx.report.conditions['f_minus_h'] = result.comparison
        _report_stabilization(ctx, result.from_f, 'T_f')
        _report_stabilization(ctx, result.from_h, 'T_h')

        for part in (result.from_f, result.from_h):
            if not part.certified:
                ctx.report.witness = part.violations[0]
                return Verdict.VIOLATION
        if result.homo5 is not None:
            if result.homo5['holds']:
                return Verdict.HYPERSTABLE
            ctx.report.note('g grows without bound on the window but f = h = f(e) g is not observed there')
        return Verdict.HUR_STABLE


def setup(lab: Any) -> None:
    lab.add_cog(Exponential(lab))

