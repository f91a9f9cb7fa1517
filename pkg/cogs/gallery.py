from __future__ import annotations

import logging
import math
from typing import Any, Dict, List, Optional

from ext.algebra import sup_norm
from ext.errors import HypothesisViolation, PreconditionViolation
from ext.functions import ControlFunction
from ext.report import Verdict
from ext.scenario import Cog, ScenarioContext, scenario

from cogs.exponential import baker_bound, compute_defect_exponential, dichotomy_check, gap, stabilize_exponential_algebra
from cogs.linear import EQUATION_OPTIONS, LinearEquationSpec, admissible, backward_ratio, forward_ratio, homogeneous_bound, hu_bound_backward, hu_bound_forward, inverse_map

logger = logging.getLogger('ulamlab.cogs.gallery')

CONSTANT_DEFECT_TOL = 1e-12


def hyers_bound(eps: float) -> float:
    """||f(x+y) - f(x) - f(y)|| <= eps gives ||f - A|| <= eps"""
    return eps


def rassias_bound(eps: float, power: float, norm: float) -> float:
    """2 eps / |2 - 2^p| ||x||^p"""
    if power == 1:
        raise PreconditionViolation('p != 1', power)
    return 2 * eps / abs(2 - 2 ** power) * norm ** power


def gavruta_bound(theta: float, power: float, norm: float) -> float:
    """(2^p + sqrt(4^p + 8 theta)) / 2 ||x||^p"""
    return (2 ** power + math.sqrt(4 ** power + 8 * theta)) / 2 * norm ** power


def inverted(spec: LinearEquationSpec) -> LinearEquationSpec:
    """f(rho(y)) = p(y) f(y) rewritten as f(rho^-1(x)) = f(x) / p(rho^-1(x))"""
    if spec.rho_inverse is None:
        raise PreconditionViolation('rho^-1 declared')
    rho, back = spec.rho, spec.rho_inverse
    return LinearEquationSpec(back, lambda x: 1 / spec.p(back(x)), None, 'backward', rho)


class Gallery(Cog):
    """Classical examples and counterexamples run through the stability machinery"""

    @scenario('gallery.baker-example', anchor='Baker counterexample in C^2', description='f(z) = (e^z, delta) under the max norm: constant defect, unbounded, not exponential', requires=('functions.f',))
    def baker_example(self, ctx: ScenarioContext) -> Verdict:
        f = ctx.function('f')
        delta = ctx.param('delta')
        eps = abs(delta - delta ** 2)
        pairs = ctx.window.pairs()

        defects = []
        for x, y in pairs:
            size, _ = gap(f(ctx.domain.op(x, y)), f(x) * f(y))
            defects.append(size)
        spread = max(abs(d - eps) for d in defects)
        ctx.report.details.update(expected_defect=eps, pairs_sampled=len(pairs), defect=compute_defect_exponential(f, f, ctx.window, ctx.domain), defect_spread=spread)

        growth = []
        start = ctx.config.window.start
        for stop in ctx.options.get('growth_stops') or []:
            largest = sup_norm(f, ctx.sub_window(start, stop))
            growth.append({'stop': stop, 'sup_norm': largest.value, 'witness': largest.witness})
        ctx.report.conditions['growth'] = growth
        increasing = all(b['sup_norm'] > a['sup_norm'] for a, b in zip(growth, growth[1:]))

        refusal: Optional[Dict[str, Any]] = None
        psi = ControlFunction.constant('psi', 2, eps)
        try:
            stabilize_exponential_algebra(f, f, psi, ctx.window, ctx.domain, ctx.tol, ctx.max_steps)
        except HypothesisViolation as e:
            refusal = {'condition': e.condition, 'details': e.details}
            ctx.report.note('M_f is empty on the window, so the unit-lift stabilizer has nothing to iterate')
        ctx.report.details['algebra_stabilizer'] = refusal

        outcome = dichotomy_check(f, eps, ctx.window, ctx.domain, ctx.tol)
        ctx.report.details['dichotomy'] = outcome
        ctx.report.note(f'the max norm of {ctx.algebra.describe()} is not multiplicative')

        if spread > CONSTANT_DEFECT_TOL:
            ctx.report.witness = {'check': 'constant defect', 'spread': spread}
            return Verdict.VIOLATION
        if not increasing:
            ctx.report.witness = {'check': 'sup norm grows with the window', 'growth': growth}
            return Verdict.VIOLATION
        if refusal is None or outcome.verdict != Verdict.VIOLATION:
            ctx.report.witness = {'check': 'no stability conclusion', 'dichotomy': outcome.verdict}
            return Verdict.VIOLATION
        ctx.report.witness = outcome.witness
        return Verdict.HYPOTHESES_NOT_MET

    @scenario('gallery.gajda-no-certificate', anchor="Gajda's counterexample corollaries", description='no L < 1 for f(2x) = 2f(x) forward or f(x/2) = f(x)/2 backward with psi = theta|x|', requires=('controls.psi', 'options.rho', 'options.rho_inverse', 'options.p'), expressions=EQUATION_OPTIONS)
    def gajda(self, ctx: ScenarioContext) -> Verdict:
        psi = ctx.control('psi', 1)
        spec = LinearEquationSpec(ctx.domain_map('rho'), ctx.scalar_map('p'), rho_inverse=ctx.domain_map('rho_inverse'))
        back = inverted(spec)

        forward, forward_at = forward_ratio(spec, psi, ctx.window)
        backward, backward_at = backward_ratio(back, psi, inverse_map(back, ctx.window, ctx.domain), ctx.window)
        rows: List[Dict[str, Any]] = [
            {'direction': 'forward', 'sup_ratio': forward, 'witness': forward_at, 'certificate': admissible(forward) is not None},
            {'direction': 'backward', 'sup_ratio': backward, 'witness': backward_at, 'certificate': admissible(backward) is not None},
        ]
        ctx.report.conditions['lipschitz'] = rows
        found = [row for row in rows if row['certificate']]
        if found:
            ctx.report.witness = found[0]
            return Verdict.VIOLATION
        ctx.report.note('the Lipschitz ratio is 1 in both directions, the boundary case the contraction argument excludes')
        return Verdict.NO_CERTIFICATE

    @scenario('gallery.bound-formulas', anchor='Hyers, Rassias, Gavruta and Baker bounds', description='evaluate the classical stability bounds on the window', requires=('params.eps',))
    def bound_formulas(self, ctx: ScenarioContext) -> Verdict:
        eps = ctx.param('eps')
        power = ctx.param('power', 0.5)
        theta = ctx.param('theta', eps)
        rows = []
        for x in ctx.window:
            norm = ctx.domain.magnitude(x)
            row: Dict[str, Any] = {
                'element': x,
                'hyers': hyers_bound(eps),
                'rassias': rassias_bound(eps, power, norm) if norm > 0 or power > 0 else math.inf,
                'gavruta': gavruta_bound(theta, power, norm) if norm > 0 or power > 0 else math.inf,
            }
            if 'a' in ctx.options and 'k' in ctx.options:
                row['homogeneous'] = homogeneous_bound(norm, power, float(ctx.options.a), complex(ctx.options.k)) if norm > 0 or power > 0 else math.inf
            rows.append(row)
        ctx.report.bound_profile = rows

        constants: Dict[str, float] = {'baker': baker_bound(eps)}
        if 'a' in ctx.options and float(ctx.options.a) > 1:
            constants['hu_forward'] = hu_bound_forward(float(ctx.options.a), eps)
        if 'L' in ctx.options:
            constants['hu_backward'] = hu_bound_backward(float(ctx.options.L), eps)
        ctx.report.details['constant_bounds'] = constants
        return Verdict.BOUNDS


def setup(lab: Any) -> None:
    lab.add_cog(Gallery(lab))
