from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, FrozenSet, List, Optional, Sequence, Tuple

from ext.algebra import AlgebraSpec, AlgebraValue
from ext.errors import (DomainRangeError, EngineInconsistency, HypothesisViolation, NoCertificate, NotConverged, OutsideWindow, PreconditionViolation, RepresentabilityError,
                        WindowExhausted)
from ext.fixedpoint import FixedPoint, IterationOperator, iterate_to_fixed_point
from ext.functions import ControlFunction, FunctionMap, Map, ScalarMap, derive_pexider_linear_control
from ext.report import Verdict
from ext.scenario import Cog, ScenarioContext, scenario
from ext.semigroup import Element, SemigroupDomain, Window
from ext.utility import fit_limit, grows_unboundedly, limit_is_zero, within

from cogs.exponential import gap

logger = logging.getLogger('ulamlab.cogs.linear')

SelfMap = Callable[[Element], Element]
Coefficient = Callable[[Element], complex]

# ratios this close to 1 leave no admissible L
LIPSCHITZ_MARGIN = 1e-12
UNREACHABLE = (DomainRangeError, RepresentabilityError)
# option keys a linear equation reads as expressions over x
EQUATION_OPTIONS = {'rho': 1, 'rho_inverse': 1, 'p': 1, 'q': 1}


@dataclass
class LinearEquationSpec:
    """f(rho(x)) = p(x) f(x) + q(x)"""
    rho: SelfMap
    p: Coefficient
    q: Optional[Coefficient] = None
    direction: str = 'forward'
    rho_inverse: Optional[SelfMap] = None

    def q_at(self, x: Element) -> complex:
        return self.q(x) if self.q is not None else 0j

    def check_p(self, window: Window) -> None:
        for x in window:
            if abs(self.p(x)) == 0:
                raise PreconditionViolation('|p(x)| > 0', repr(x))

    def residual(self, f: Map, g: Map=None) -> Callable[[Element], Tuple[AlgebraValue, AlgebraValue]]:
        """x -> (f(rho(x)), p(x) g(x) + q(x)), with g = f by default"""
        g = g or f
        return lambda x: (f(self.rho(x)), g(x) * self.p(x) + self.q_at(x))


def check_linear_domination(residual: Callable[[Element], Tuple[AlgebraValue, AlgebraValue]], psi: ControlFunction, window: Window, condition: str='linear defect dominated by psi') -> float:
    """Largest defect over the window, raising HypothesisViolation where it exceeds psi"""
    worst = 0.0
    for x in window:
        try:
            lhs, rhs = residual(x)
        except UNREACHABLE:
            continue
        size, magnitude = gap(lhs, rhs)
        worst = max(worst, size)
        if not within(size, psi(x), magnitude):
            raise HypothesisViolation(condition, repr(x), {'defect': size, 'psi': psi(x)})
    return worst


def admissible(ratio: float) -> Optional[float]:
    """The Lipschitz constant for an observed sup ratio, or None when no L < 1 exists"""
    if ratio == 0:
        return 0.5
    if not ratio < 1 - LIPSCHITZ_MARGIN:
        return None
    return ratio


def forward_ratio(spec: LinearEquationSpec, psi: ControlFunction, window: Window) -> Tuple[float, Optional[Element]]:
    """sup of psi(rho(x)) / (|p(rho(x))| psi(x)) over window points with psi(x) != 0"""
    worst, witness = 0.0, None
    for x in window:
        base = psi(x)
        if base == 0 or not math.isfinite(base):
            continue
        try:
            y = spec.rho(x)
            ratio = psi(y) / (abs(spec.p(y)) * base)
        except UNREACHABLE:
            continue
        except ZeroDivisionError:
            ratio = math.inf
        if ratio > worst or witness is None:
            worst, witness = max(worst, ratio), x
    return worst, witness


def find_lipschitz_forward(spec: LinearEquationSpec, psi: ControlFunction, window: Window) -> Optional[float]:
    return admissible(forward_ratio(spec, psi, window)[0])


def inverse_map(spec: LinearEquationSpec, window: Window, domain: SemigroupDomain) -> SelfMap:
    """rho^-1, either declared and checked or read off the window's inversion table"""
    if spec.rho_inverse is not None:
        inverse = spec.rho_inverse
        for x in window:
            try:
                back = spec.rho(inverse(x))
            except UNREACHABLE:
                continue
            if back != x:
                raise PreconditionViolation('rho(rho^-1(x)) = x', repr(x), {'rho(rho^-1(x))': repr(back)})
        return inverse

    members = set(window)
    table: Dict[Element, Element] = {}
    for x in window:
        try:
            y = spec.rho(x)
        except UNREACHABLE as e:
            raise PreconditionViolation('rho permutes the window', repr(x), {'error': str(e)})
        if y in table:
            raise PreconditionViolation('rho injective on the window', {'collision': [repr(table[y]), repr(x)], 'image': repr(y)})
        if y not in members:
            raise PreconditionViolation('rho permutes the window', repr(x), {'image': repr(y)})
        table[y] = x

    def lookup(x: Element) -> Element:
        try:
            return table[x]
        except KeyError:
            raise DomainRangeError(x, domain) from None
    return lookup


def backward_ratio(spec: LinearEquationSpec, psi: ControlFunction, inverse: SelfMap, window: Window) -> Tuple[float, Optional[Element]]:
    """sup of |p(x)| psi(rho^-1(x)) / psi(x) over window points with psi(x) != 0"""
    worst, witness = 0.0, None
    for x in window:
        base = psi(x)
        if base == 0 or not math.isfinite(base):
            continue
        try:
            ratio = abs(spec.p(x)) * psi(inverse(x)) / base
        except UNREACHABLE:
            continue
        if ratio > worst or witness is None:
            worst, witness = max(worst, ratio), x
    return worst, witness


def find_lipschitz_backward(spec: LinearEquationSpec, psi: ControlFunction, window: Window, domain: SemigroupDomain) -> Optional[float]:
    return admissible(backward_ratio(spec, psi, inverse_map(spec, window, domain), window)[0])


@dataclass
class LinearSolution:
    solution: Map
    lipschitz: float
    fixed_point: FixedPoint
    profile: List[Dict[str, Any]] = field(default_factory=list)
    direction: str = 'forward'
    residual: float = 0.0
    skipped: int = 0
    violations: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.violations

    @property
    def depth(self) -> int:
        return self.fixed_point.steps

    def to_json(self) -> Dict[str, Any]:
        return {
            'direction': self.direction,
            'lipschitz': self.lipschitz,
            'depth': self.depth,
            'stop_reason': self.fixed_point.trace.stop_reason,
            'start_distance': self.fixed_point.start_distance,
            'recurrence_residual': self.residual,
            'points_skipped': self.skipped,
            'violations': self.violations,
        }


def within_region(f: Map, window: Window) -> FunctionMap:
    """f read only on the window and its reach, raising OutsideWindow past them"""
    region = window.evaluated

    def read(x: Element) -> AlgebraValue:
        if x not in region:
            raise OutsideWindow(x)
        return f(x)

    return FunctionMap(f'{getattr(f, "name", "f")}|window', read, getattr(f, 'spec', None) or AlgebraSpec())


def orbit_room(rho: SelfMap, x: Element, region: FrozenSet[Element], cap: int) -> int:
    """How many rho steps from x stay inside the region, up to cap"""
    room = 0
    while room < cap:
        try:
            x = rho(x)
        except UNREACHABLE:
            break
        if x not in region:
            break
        room += 1
    return room


def _run_engine(J: IterationOperator, f: Map, weight: Callable[[Element], float], window: Window, tol: float, max_steps: int) -> FixedPoint:
    spec = getattr(f, 'spec', None) or AlgebraSpec()
    scale = max([1.0] + [w for w in map(weight, window) if math.isfinite(w)])
    fp = iterate_to_fixed_point(J, f, weight, window.elements, tol / scale, max_steps, spec)
    if not fp.converged:
        raise NotConverged(fp.trace.stop_reason, fp.steps)
    return fp


def _certify(result: LinearSolution, spec: LinearEquationSpec, f: Map, bound: Callable[[Element], float], window: Window, tol: float) -> LinearSolution:
    T = result.solution
    for x in window:
        size, magnitude = gap(f(x), T(x))
        b = bound(x)
        dominated = within(size, b + tol, magnitude)
        result.profile.append({'element': x, 'bound': b, 'observed': size, 'dominated': dominated, 'depth': result.depth})
        if not dominated:
            result.violations.append({'check': 'bound', 'element': x, 'observed': size, 'bound': b})

    for x in window:
        try:
            lhs, rhs = spec.residual(T)(x)
        except UNREACHABLE + (WindowExhausted,):
            result.skipped += 1
            continue
        size, magnitude = gap(lhs, rhs)
        allowed = tol * (1 + abs(spec.p(x)))
        result.residual = max(result.residual, size)
        if not within(size, allowed, magnitude):
            result.violations.append({'check': 'T(rho(x)) = p(x) T(x) + q(x)', 'element': x, 'residual': size})
            break
    return result


def solve_linear_forward(spec: LinearEquationSpec, f: Map, psi: ControlFunction, window: Window, tol: float, max_steps: int=200, L: float=None) -> LinearSolution:
    """T = lim (J^n f) with J(h)(x) = (h(rho(x)) - q(x)) / p(x), weighted by psi/|p|.

    f is only read on the window and its reach; an orbit that needs data past
    them raises WindowExhausted.
    """
    spec.check_p(window)
    f = within_region(f, window)
    if L is None:
        ratio, witness = forward_ratio(spec, psi, window)
        L = admissible(ratio)
        if L is None:
            raise NoCertificate('no L < 1 with psi(rho(x)) <= L |p(rho(x))| psi(x)', {'sup_ratio': ratio, 'witness': witness})
    check_linear_domination(spec.residual(f), psi, window)

    def apply(h: Map) -> Map:
        return lambda x: (h(spec.rho(x)) - spec.q_at(x)) / spec.p(x)

    J = IterationOperator(apply, L, 'forward linear')
    fp = _run_engine(J, f, lambda x: psi(x) / abs(spec.p(x)), window, tol, max_steps)
    logger.debug(f'forward solve converged in {fp.steps} steps with L = {L}')
    result = LinearSolution(fp.solution, L, fp, direction='forward')
    _certify(result, spec, f, lambda x: psi(x) / ((1 - L) * abs(spec.p(x))), window, tol)
    region = window.evaluated
    for row in result.profile:
        row['orbit_room'] = orbit_room(spec.rho, row['element'], region, len(region))
    return result


def solve_linear_backward(spec: LinearEquationSpec, f: Map, psi: ControlFunction, window: Window, domain: SemigroupDomain, tol: float, max_steps: int=200, L: float=None) -> LinearSolution:
    """T = lim (J^n f) with J(h)(x) = p(rho^-1 x) h(rho^-1 x) + q(rho^-1 x), weighted by psi o rho^-1"""
    spec.check_p(window)
    inverse = inverse_map(spec, window, domain)
    if L is None:
        ratio, witness = backward_ratio(spec, psi, inverse, window)
        L = admissible(ratio)
        if L is None:
            raise NoCertificate('no L < 1 with |p(x)| psi(rho^-1(x)) <= L psi(x)', {'sup_ratio': ratio, 'witness': witness})
    check_linear_domination(spec.residual(f), psi, window)

    def apply(h: Map) -> Map:
        def image(x: Element) -> AlgebraValue:
            y = inverse(x)
            return h(y) * spec.p(y) + spec.q_at(y)
        return image

    def weight(x: Element) -> float:
        try:
            return psi(inverse(x))
        except UNREACHABLE:
            return math.inf

    J = IterationOperator(apply, L, 'backward linear')
    fp = _run_engine(J, f, weight, window, tol, max_steps)
    result = LinearSolution(fp.solution, L, fp, direction='backward')
    return _certify(result, spec, f, lambda x: weight(x) / (1 - L), window, tol)


def difference_ratio(spec: LinearEquationSpec, f: Map, g: Map, window: Window) -> Tuple[float, Optional[Element]]:
    """sup of ||f - g||(rho(x)) / ||f - g||(x)"""
    worst, witness = 0.0, None
    for x in window:
        try:
            after = (f(spec.rho(x)) - g(spec.rho(x))).norm()
        except UNREACHABLE:
            continue
        before = (f(x) - g(x)).norm()
        if before == 0:
            ratio = 0.0 if after == 0 else math.inf
        else:
            ratio = after / before
        if ratio > worst or witness is None:
            worst, witness = max(worst, ratio), x
    return worst, witness


@dataclass
class PexiderLinearSolution:
    forward: LinearSolution
    g_profile: List[Dict[str, Any]]
    psi_ratio: float
    difference_ratio: float

    @property
    def certified(self) -> bool:
        return self.forward.certified and all(row['dominated'] for row in self.g_profile)

    @property
    def stated_bound_holds(self) -> bool:
        return all(row['stated_dominates'] for row in self.g_profile)

    def to_json(self) -> Dict[str, Any]:
        return {
            'forward': self.forward.to_json(),
            'psi_ratio': self.psi_ratio,
            'difference_ratio': self.difference_ratio,
            'stated_g_bound_holds': self.stated_bound_holds,
        }


def solve_pexider_linear(spec: LinearEquationSpec, f: Map, g: Map, psi: ControlFunction, window: Window, tol: float, max_steps: int=200) -> PexiderLinearSolution:
    """Stabilizes f(rho(x)) = p(x) g(x) + q(x) through psi~ = psi + |p| ||f - g||"""
    spec.check_p(window)
    check_linear_domination(spec.residual(f, g), psi, window, 'f(rho(x)) - p(x) g(x) - q(x) dominated by psi')

    psi_ratio, psi_witness = forward_ratio(spec, psi, window)
    if admissible(psi_ratio) is None:
        raise HypothesisViolation('psi(rho(x)) <= L |p(rho(x))| psi(x) with L < 1', repr(psi_witness), {'sup_ratio': psi_ratio})
    diff_ratio, diff_witness = difference_ratio(spec, f, g, window)
    if admissible(diff_ratio) is None:
        raise HypothesisViolation('||f - g||(rho(x)) <= L ||f - g||(x) with L < 1', repr(diff_witness), {'sup_ratio': diff_ratio})
    L = admissible(max(psi_ratio, diff_ratio))

    tilde = derive_pexider_linear_control(psi, spec.p, f, g)
    tilde_ratio, tilde_witness = forward_ratio(spec, tilde, window)
    if tilde_ratio > L + LIPSCHITZ_MARGIN:
        raise HypothesisViolation('psi~(rho(x)) <= L |p(rho(x))| psi~(x)', repr(tilde_witness), {'sup_ratio': tilde_ratio, 'L': L})

    forward = solve_linear_forward(spec, f, tilde, window, tol, max_steps, L)
    T = forward.solution
    rows = []
    for x in window:
        size, magnitude = gap(g(x), T(x))
        p = abs(spec.p(x))
        stated = L / (1 - L) * (tilde(x) + psi(x)) / p
        direct = (psi(x) + L * tilde(x) / (1 - L)) / p
        rows.append({
            'element': x,
            'observed': size,
            'stated_bound': stated,
            'direct_bound': direct,
            'stated_dominates': within(size, stated + tol, magnitude),
            'dominated': within(size, direct + tol, magnitude),
        })
    return PexiderLinearSolution(forward, rows, psi_ratio, diff_ratio)


@dataclass
class FamilyMember:
    """One equation f(rho_i(x)) = p_i(x) f(x) of a homogeneous family"""
    index: Any
    rho: SelfMap
    p: Coefficient
    psi: ControlFunction
    L: Optional[float] = None
    constant: Optional[complex] = None

    @property
    def equation(self) -> LinearEquationSpec:
        return LinearEquationSpec(self.rho, self.p)

    def log_P(self, n: int, x: Element) -> float:
        """ln |P_{i,n}(x)| with P_{i,n}(x) = prod_{k<n} p_i(rho_i^k(x))"""
        total = 0.0
        for _ in range(n):
            total += math.log(abs(self.p(x)))
            x = self.rho(x)
        return total

    def P(self, n: int, x: Element) -> complex:
        product = 1 + 0j
        for _ in range(n):
            product *= self.p(x)
            x = self.rho(x)
        return product

    def theta(self, n: int, x: Element) -> float:
        """(1 - L^n) psi(x) / ((1 - L) |p(x)|)"""
        L = self.L if self.L is not None else 0.5
        return (1 - L ** n) * self.psi(x) / ((1 - L) * abs(self.p(x)))


@dataclass
class FamilySpec:
    members: List[FamilyMember]

    def __post_init__(self) -> None:
        if not self.members:
            raise PreconditionViolation('family non-empty')
        for m in self.members:
            if m.L is not None and not 0 < m.L < 1:
                raise PreconditionViolation('L_i in (0,1)', m.index, {'L': m.L})

    def __iter__(self) -> Any:
        return iter(self.members)

    def __len__(self) -> int:
        return len(self.members)

    @property
    def constant(self) -> bool:
        return all(m.constant is not None for m in self.members)

    def pairs(self) -> List[Tuple[FamilyMember, FamilyMember]]:
        return [(a, b) for a in self.members for b in self.members if a is not b]


def family_from_constants(rhos: Sequence[SelfMap], constants: Sequence[complex], psis: Sequence[ControlFunction], window: Window, Ls: Sequence[Optional[float]]=None, indices: Sequence[Any]=None) -> Tuple[FamilySpec, List[Dict[str, Any]]]:
    """Keeps the indices with |c_i| > 1 and L_i |c_i| in (0,1]; L_i is derived when not given"""
    Ls = list(Ls) if Ls is not None else [None] * len(constants)
    indices = list(indices) if indices is not None else list(range(1, len(constants) + 1))
    members, excluded = [], []
    for i, rho, c, psi, L in zip(indices, rhos, constants, psis, Ls):
        c = complex(c)
        if not abs(c) > 1:
            excluded.append({'index': i, 'reason': '|c_i| <= 1', 'c': c})
            continue
        member = FamilyMember(i, rho, lambda x, c=c: c, psi, L, constant=c)
        if L is None:
            ratio, _ = forward_ratio(member.equation, psi, window)
            member.L = admissible(ratio)
            if member.L is None:
                excluded.append({'index': i, 'reason': 'no L_i < 1', 'sup_ratio': ratio})
                continue
        if not 0 < member.L * abs(c) <= 1 + LIPSCHITZ_MARGIN:
            excluded.append({'index': i, 'reason': 'L_i |c_i| outside (0,1]', 'L': member.L})
            continue
        members.append(member)
    if not members:
        raise HypothesisViolation('admissible sub-family non-empty', None, {'excluded': excluded})
    return FamilySpec(members), excluded


@dataclass
class CrossLimit:
    """lim theta_{i,n}(rho_j^n(x)) / |P_{j,n}(x)| for one ordered index pair"""
    i: Any
    j: Any
    limit: float = 0.0
    witness: Optional[Element] = None
    shortest: Optional[int] = None
    met: bool = True
    chain_dominates: Optional[bool] = None

    def to_json(self) -> Dict[str, Any]:
        return {'i': self.i, 'j': self.j, 'limit': self.limit, 'witness': self.witness, 'terms': self.shortest, 'met': self.met, 'chain_dominates': self.chain_dominates}


@dataclass
class CommonConditionReport:
    lipschitz: Dict[Any, float] = field(default_factory=dict)
    commuting: int = 0
    invariant: int = 0
    cross: List[CrossLimit] = field(default_factory=list)

    def to_json(self) -> Dict[str, Any]:
        return {
            'lipschitz': {str(k): v for k, v in self.lipschitz.items()},
            'commuting_points': self.commuting,
            'invariant_points': self.invariant,
            'cross_limits': [c.to_json() for c in self.cross],
        }


def cross_limit(a: FamilyMember, b: FamilyMember, window: Window, n_max: int, tail_tol: float, chain: bool) -> CrossLimit:
    """Evaluates theta_{a,n}(rho_b^n(x)) / |P_{b,n}(x)| for n <= n_max in log space"""
    report = CrossLimit(a.index, b.index)
    for x in window:
        values: List[float] = []
        y, log_P = x, 0.0
        dominated = True
        for n in range(1, n_max + 1):
            try:
                multiplier = abs(b.p(y))
                if multiplier == 0:
                    raise PreconditionViolation('P_{j,n}(x) nonzero', repr(x), {'j': b.index, 'n': n})
                log_P += math.log(multiplier)
                y = b.rho(y)
                theta = a.theta(n, y)
            except UNREACHABLE:
                break
            term = math.exp(math.log(theta) - log_P) if theta > 0 else 0.0
            values.append(term)
            if chain and a.constant is not None and b.constant is not None:
                L = a.L or 0.5
                log_bound = n * (math.log(L) + math.log(abs(a.constant)) - math.log(abs(b.constant)))
                bound = (1 - L ** n) * a.psi(x) * math.exp(log_bound)
                dominated = dominated and term <= bound + 1e-9
        if not values:
            continue
        limit, _ = fit_limit(values)
        met = limit_is_zero(limit, tail_tol, values[0], len(values))
        if report.shortest is None or len(values) < report.shortest:
            report.shortest = len(values)
        if limit > report.limit or (not met and report.met):
            report.limit, report.witness = limit, x
        report.met = report.met and met
        if chain:
            report.chain_dominates = dominated if report.chain_dominates is None else report.chain_dominates and dominated
    return report


def check_common_conditions(family: FamilySpec, window: Window, n_max: int=512, tail_tol: float=1e-6) -> CommonConditionReport:
    report = CommonConditionReport()
    for m in family:
        ratio, witness = forward_ratio(m.equation, m.psi, window)
        if m.L is None:
            m.L = admissible(ratio)
        if m.L is None or ratio > m.L + LIPSCHITZ_MARGIN:
            raise HypothesisViolation('lipschitz', repr(witness), {'index': m.index, 'sup_ratio': ratio, 'L': m.L})
        report.lipschitz[m.index] = m.L

    for a, b in family.pairs():
        for x in window:
            try:
                ab, ba = a.rho(b.rho(x)), b.rho(a.rho(x))
            except UNREACHABLE:
                continue
            report.commuting += 1
            if ab != ba:
                raise HypothesisViolation('commuting', repr(x), {'i': a.index, 'j': b.index, 'rho_i(rho_j(x))': repr(ab), 'rho_j(rho_i(x))': repr(ba)})
            try:
                shifted = a.p(b.rho(x))
            except UNREACHABLE:
                continue
            report.invariant += 1
            if not within(abs(shifted - a.p(x)), 0.0, abs(a.p(x))):
                raise HypothesisViolation('invariant-multipliers', repr(x), {'i': a.index, 'j': b.index, 'p_i(rho_j(x))': shifted, 'p_i(x)': a.p(x)})

    for a, b in family.pairs():
        limit = cross_limit(a, b, window, n_max, tail_tol, family.constant)
        report.cross.append(limit)
        if not limit.met:
            raise HypothesisViolation('cross-limit', repr(limit.witness), limit.to_json())
    return report


@dataclass
class CommonSolution:
    solution: Map
    fastest: Any
    members: Dict[Any, LinearSolution]
    conditions: CommonConditionReport
    profile: List[Dict[str, Any]] = field(default_factory=list)
    agreement: float = 0.0
    residuals: Dict[Any, float] = field(default_factory=dict)
    violations: List[Dict[str, Any]] = field(default_factory=list)

    @property
    def certified(self) -> bool:
        return not self.violations

    def to_json(self) -> Dict[str, Any]:
        return {
            'fastest': self.fastest,
            'conditions': self.conditions.to_json(),
            'members': {str(k): v.to_json() for k, v in self.members.items()},
            'agreement': self.agreement,
            'recurrence_residuals': {str(k): v for k, v in self.residuals.items()},
            'violations': self.violations,
        }


def solve_common_stability(family: FamilySpec, f: Map, window: Window, tol: float, n_max: int=512, tail_tol: float=1e-6, max_steps: int=200) -> CommonSolution:
    """One T solving every f(rho_i(x)) = p_i(x) f(x), checked against inf_i psi_i / ((1 - L_i)|p_i|)"""
    conditions = check_common_conditions(family, window, n_max, tail_tol)
    runs = {m.index: solve_linear_forward(m.equation, f, m.psi, window, tol, max_steps, m.L) for m in family}

    fastest = min(family, key=lambda m: (m.L, str(m.index)))
    T = runs[fastest.index].solution
    result = CommonSolution(T, fastest.index, runs, conditions)

    for a, b in family.pairs():
        for x in window:
            size, magnitude = gap(runs[a.index].solution(x), runs[b.index].solution(x))
            result.agreement = max(result.agreement, size)
            if not within(size, 2 * tol, magnitude):
                raise EngineInconsistency((a.index, b.index, repr(x)), size)

    for x in window:
        size, magnitude = gap(f(x), T(x))
        b = min(m.psi(x) / ((1 - m.L) * abs(m.p(x))) for m in family)
        dominated = within(size, b + tol, magnitude)
        result.profile.append({'element': x, 'bound': b, 'observed': size, 'dominated': dominated})
        if not dominated:
            result.violations.append({'check': 'common bound', 'element': x, 'observed': size, 'bound': b})

    for m in family:
        worst = 0.0
        for x in window:
            try:
                lhs, rhs = T(m.rho(x)), T(x) * m.p(x)
            except UNREACHABLE + (WindowExhausted,):
                continue
            size, magnitude = gap(lhs, rhs)
            worst = max(worst, size)
            if not within(size, tol * (1 + abs(m.p(x))), magnitude):
                result.violations.append({'check': 'T(rho_i(x)) = p_i(x) T(x)', 'index': m.index, 'element': x, 'residual': size})
                break
        result.residuals[m.index] = worst
    return result


@dataclass
class JSetReport:
    members: List[FamilyMember] = field(default_factory=list)
    excluded: List[Dict[str, Any]] = field(default_factory=list)

    def rows(self) -> List[Dict[str, Any]]:
        return [{'element': m.index, 'g': m.constant, 'L': m.L} for m in self.members]


def find_J_set(g: Map, phi: ControlFunction, window: Window, domain: SemigroupDomain, candidates: Sequence[Element]=None) -> JSetReport:
    """Elements i with |g(i)| > 1 and phi(x, y.i) <= L_i |g(i)| phi(x,y), L_i in (0,1), L_i |g(i)| <= 1"""
    report = JSetReport()
    for i in candidates or window:
        c = g(i).unit_multiple()
        if c is None or not abs(c) > 1:
            report.excluded.append({'element': i, 'reason': '|g(i)| <= 1'})
            continue
        ratio = 0.0
        for x, y in window.pairs():
            try:
                after = phi(x, domain.op(y, i))
            except UNREACHABLE:
                continue
            before = phi(x, y)
            if before == 0:
                ratio = ratio if after == 0 else math.inf
            else:
                ratio = max(ratio, after / before)
        L = ratio / abs(c) if ratio > 0 else 1 / abs(c)
        if not (0 < L < 1 and L * abs(c) <= 1 + LIPSCHITZ_MARGIN):
            report.excluded.append({'element': i, 'reason': 'no admissible L_i', 'ratio': ratio})
            continue
        psi = ControlFunction(f'phi({i!r},.)', 1, lambda y, i=i: phi(i, y), phi.source)
        report.members.append(FamilyMember(i, lambda x, i=i: domain.op(x, i), lambda x, c=c: c, psi, L, constant=c))
    return report


@dataclass
class ExponentialViaCommon:
    verdict: Verdict
    j_set: JSetReport
    common: Optional[CommonSolution] = None
    identity_residual: float = 0.0
    witness: Any = None
    truncated: int = 0

    def to_json(self) -> Dict[str, Any]:
        return {
            'verdict': self.verdict,
            'J': self.j_set.rows(),
            'excluded': len(self.j_set.excluded),
            'truncated': self.truncated,
            'common': self.common.to_json() if self.common else None,
            'identity_residual': self.identity_residual,
            'witness': self.witness,
        }


def exponential_via_common(f: Map, g: Map, phi: ControlFunction, window: Window, domain: SemigroupDomain, tol: float, n_max: int=512, tail_tol: float=1e-6, max_steps: int=200,
                           threshold: float=1e6, members: Sequence[Element]=None, limit: Optional[int]=None) -> ExponentialViaCommon:
    """Hyperstability of f(x.y) = g(y) f(x) through the family rho_i(x) = x.i, c_i = g(i), psi_i = phi(i, .)

    Every J-set member joins the family unless ``limit`` caps it; the report
    counts the members a cap leaves out.
    """
    def residual(x: Element, y: Element) -> Tuple[AlgebraValue, AlgebraValue]:
        return f(domain.op(x, y)), f(x) * g(y).components[0]

    for x, y in window.pairs():
        try:
            lhs, rhs = residual(x, y)
        except UNREACHABLE:
            continue
        size, magnitude = gap(lhs, rhs)
        if not within(size, phi(x, y), magnitude):
            raise HypothesisViolation('defect dominated by phi', (repr(x), repr(y)), {'defect': size, 'phi': phi(x, y)})

    j_set = find_J_set(g, phi, window, domain, members)
    if not j_set.members:
        raise HypothesisViolation('J-set non-empty', None, {'excluded': j_set.excluded[:8]})
    ordered = sorted(window, key=lambda e: (domain.magnitude(e), e))
    if not grows_unboundedly([g(e).norm() for e in ordered], threshold):
        raise HypothesisViolation('g unbounded on the window', None, {'sup': max(g(e).norm() for e in window), 'threshold': threshold})

    chosen = j_set.members if limit is None else j_set.members[:limit]
    if len(chosen) < len(j_set.members):
        logger.info(f'Solving over {len(chosen)} of {len(j_set.members)} J-set members')
    common = solve_common_stability(FamilySpec(chosen), f, window, tol, n_max, tail_tol, max_steps)
    result = ExponentialViaCommon(Verdict.HYPERSTABLE, j_set, common, truncated=len(j_set.members) - len(chosen))
    if not common.certified:
        result.verdict, result.witness = Verdict.VIOLATION, common.violations[0]
        return result

    for x, y in window.pairs():
        try:
            lhs, rhs = residual(x, y)
        except UNREACHABLE:
            continue
        size, magnitude = gap(lhs, rhs)
        result.identity_residual = max(result.identity_residual, size)
        if not within(size, tol * (1 + g(y).norm()), magnitude):
            result.verdict, result.witness = Verdict.VIOLATION, {'check': 'f(x.y) = g(y) f(x)', 'pair': (x, y), 'residual': size}
            break
    return result


def hu_bound_forward(a: float, delta: float) -> float:
    """Constant-control bound a delta / (a - 1) for |p| >= a > 1"""
    if not a > 1 or delta < 0:
        raise PreconditionViolation('a > 1 and delta >= 0', (a, delta))
    return a * delta / (a - 1)


def hu_bound_backward(L: float, delta: float) -> float:
    """Constant-control bound delta / (1 - L) for |p| <= L < 1 and rho a permutation"""
    if not 0 < L < 1 or delta < 0:
        raise PreconditionViolation('0 < L < 1 and delta >= 0', (L, delta))
    return delta / (1 - L)


def homogeneous_bound(norm: float, p: float, a: float, k: complex) -> float:
    """||x||^p / ||k| - 1| for f(a x) = k f(x) under the admissible signs of p, |a| - 1 and |k| - 1"""
    big_a, big_k = abs(a) > 1, abs(k) > 1
    admissible_signs = (
        (p <= 0 and big_a and big_k)
        or (p <= 0 and abs(a) < 1 and abs(k) < 1)
        or (p >= 0 and big_a and abs(k) < 1)
        or (p >= 0 and abs(a) < 1 and big_k)
    )
    if not admissible_signs or abs(k) == 1:
        raise PreconditionViolation('(p, |a|, |k|) in an admissible combination', {'p': p, 'a': a, 'k': k})
    return norm ** p / abs(abs(k) - 1)


class Linear(Cog):
    """Stability of f(rho(x)) = p(x) f(x) + q(x) and of commuting homogeneous families"""

    def _equation(self, ctx: ScenarioContext, direction: str) -> LinearEquationSpec:
        q = ctx.scalar_map('q') if ctx.options.get('q') is not None else None
        inverse = ctx.domain_map('rho_inverse') if ctx.options.get('rho_inverse') is not None else None
        return LinearEquationSpec(ctx.domain_map('rho'), ctx.scalar_map('p'), q, direction, inverse)

    def _declared_L(self, ctx: ScenarioContext) -> Optional[float]:
        return ctx.param('L') if 'L' in ctx.params or 'L' in ctx.options else None

    def _report_solution(self, ctx: ScenarioContext, result: LinearSolution, name: str='T') -> Verdict:
        ctx.report.bound_profile = result.profile
        ctx.report.traces[ctx.trace_name(name)] = result.fixed_point.trace
        ctx.report.details['solution'] = result
        if not result.certified:
            ctx.report.witness = result.violations[0]
            return Verdict.VIOLATION
        return Verdict.HUR_STABLE

    @scenario('linear.forward', anchor='forward linear stabilization', description='T = lim f(rho^n(x)) / prod p(rho^k(x)), bound psi/((1-L)|p|)', requires=('functions.f', 'controls.psi', 'options.rho', 'options.p'), expressions=EQUATION_OPTIONS)
    def forward(self, ctx: ScenarioContext) -> Verdict:
        spec = self._equation(ctx, 'forward')
        psi = ctx.control('psi', 1)
        ratio, witness = forward_ratio(spec, psi, ctx.window)
        ctx.report.conditions['lipschitz'] = [{'sup_ratio': ratio, 'witness': witness, 'L': admissible(ratio)}]
        result = solve_linear_forward(spec, ctx.function('f'), psi, ctx.window, ctx.tol, ctx.max_steps, self._declared_L(ctx))
        return self._report_solution(ctx, result)

    @scenario('linear.backward', anchor='backward linear stabilization', description='iterate p(rho^-1 x) h(rho^-1 x) + q(rho^-1 x) for a permutation rho', requires=('functions.f', 'controls.psi', 'options.rho', 'options.p'), expressions=EQUATION_OPTIONS)
    def backward(self, ctx: ScenarioContext) -> Verdict:
        spec = self._equation(ctx, 'backward')
        result = solve_linear_backward(spec, ctx.function('f'), ctx.control('psi', 1), ctx.window, ctx.domain, ctx.tol, ctx.max_steps, self._declared_L(ctx))
        return self._report_solution(ctx, result)

    @scenario('linear.pexider', anchor='Pexider linear stabilization', description='f(rho(x)) = p(x) g(x) + q(x) through psi~ = psi + |p| ||f - g||', requires=('functions.f', 'functions.g', 'controls.psi', 'options.rho', 'options.p'), expressions=EQUATION_OPTIONS)
    def pexider(self, ctx: ScenarioContext) -> Verdict:
        spec = self._equation(ctx, 'forward')
        result = solve_pexider_linear(spec, ctx.function('f'), ctx.function('g'), ctx.control('psi', 1), ctx.window, ctx.tol, ctx.max_steps)
        ctx.report.details['pexider'] = result
        ctx.report.conditions['g_bounds'] = result.g_profile
        if not result.stated_bound_holds:
            ctx.report.note('the stated g bound L/(1-L) (psi~ + psi)/|p| fails somewhere; the bound (psi + L psi~/(1-L))/|p| is checked instead')
        verdict = self._report_solution(ctx, result.forward)
        if verdict == Verdict.HUR_STABLE and not result.certified:
            ctx.report.witness = next(row for row in result.g_profile if not row['dominated'])
            return Verdict.VIOLATION
        return verdict

    def _family(self, ctx: ScenarioContext) -> Tuple[FamilySpec, List[Dict[str, Any]]]:
        raw = list(ctx.options.get('family') or [])
        if not raw:
            raise PreconditionViolation('options.family lists at least one equation')
        rhos = [ctx.domain_map(f'rho{i}', m['rho']) for i, m in enumerate(raw, 1)]
        psis = []
        for i, m in enumerate(raw, 1):
            psi = ControlFunction.from_expression(f'psi{i}', 1, ctx.expression(m['psi']), ctx.domain)
            psi.verify_nonnegative(ctx.window.elements)
            psis.append(psi)
        Ls = [m.get('L') for m in raw]
        Ls = [float(L) if L is not None else None for L in Ls]
        if all('c' in m for m in raw):
            constants = [ctx.expression(str(m['c']))({}) for m in raw]
            return family_from_constants(rhos, constants, psis, ctx.window, Ls)
        members = [
            FamilyMember(i, rho, ScalarMap(f'p{i}', ctx.expression(str(m['p'])), ctx.domain), psi, L)
            for i, (m, rho, psi, L) in enumerate(zip(raw, rhos, psis, Ls), 1)
        ]
        return FamilySpec(members), []

    @scenario('linear.common', anchor='common stability of homogeneous families', description='one T for every f(rho_i(x)) = p_i(x) f(x), bound inf_i psi_i/((1-L_i)|p_i|)', requires=('functions.f', 'options.family'))
    def common(self, ctx: ScenarioContext) -> Verdict:
        family, excluded = self._family(ctx)
        tolerances = ctx.tolerances
        result = solve_common_stability(family, ctx.function('f'), ctx.window, ctx.tol, int(tolerances.n_max), float(tolerances.tail_tol), ctx.max_steps)
        ctx.report.details['common'] = result
        ctx.report.conditions['cross_limits'] = [c.to_json() for c in result.conditions.cross]
        if excluded:
            ctx.report.conditions['excluded'] = excluded
        if any(c.chain_dominates is False for c in result.conditions.cross):
            ctx.report.note('the constant-multiplier closed-form chain does not dominate every evaluated cross term; the evaluated limits decide')
        ctx.report.bound_profile = result.profile
        for index, run in result.members.items():
            ctx.report.traces[ctx.trace_name('T', index)] = run.fixed_point.trace
        if not result.certified:
            ctx.report.witness = result.violations[0]
            return Verdict.VIOLATION
        return Verdict.CHUR_STABLE

    @scenario('linear.exponential-via-common', anchor='exponential superstability via common stability', description='f(x.y) = g(y) f(x) from the family x -> x.i over the J-set', requires=('functions.f', 'functions.g', 'controls.phi'))
    def via_common(self, ctx: ScenarioContext) -> Verdict:
        tolerances = ctx.tolerances
        limit = ctx.options.get('limit')
        result = exponential_via_common(ctx.function('f'), ctx.function('g'), ctx.control('phi', 2), ctx.window, ctx.domain, ctx.tol, int(tolerances.n_max), float(tolerances.tail_tol),
                                        ctx.max_steps, float(tolerances.unbounded_threshold), ctx.elements_option('members'), int(limit) if limit is not None else None)
        ctx.report.details['exponential'] = result
        ctx.report.conditions['J'] = result.j_set.rows()
        if result.truncated:
            ctx.report.note(f'{result.truncated} J-set members were left out by options.limit')
        if result.common is not None:
            ctx.report.bound_profile = result.common.profile
        ctx.report.witness = result.witness
        return result.verdict


def setup(lab: Any) -> None:
    lab.add_cog(Linear(lab))
