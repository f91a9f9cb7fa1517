import math

import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from cogs.linear import (FamilyMember, FamilySpec, LinearEquationSpec, admissible, check_common_conditions, exponential_via_common, family_from_constants,
                         find_J_set, forward_ratio, homogeneous_bound, hu_bound_backward, hu_bound_forward, inverse_map, solve_common_stability,
                         solve_linear_backward, solve_linear_forward, solve_pexider_linear)
from ext.errors import HypothesisViolation, NoCertificate, PreconditionViolation, WindowExhausted
from ext.functions import ControlFunction
from ext.report import Verdict
from ext.semigroup import Element, SemigroupDomain


def shift(domain, k=1):
    return lambda x: domain.op(x, Element((k,)))


def value(T, x):
    return T(Element((x,))).components[0]


@pytest.fixture
def mod8():
    return SemigroupDomain('integers-mod-m', modulus=8)


@pytest.mark.parametrize('ratio,L', [(0, 0.5), (0.3, 0.3), (1, None), (1 - 1e-15, None), (2, None)])
def test_admissible(ratio, L):
    assert admissible(ratio) == L


def test_forward_recovers_the_exact_solution(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 2)
    psi = make_control(naturals, '1', arity=1)
    window = make_window(naturals, 0, 8, reach=64)
    assert forward_ratio(spec, psi, window)[0] == 0.5

    result = solve_linear_forward(spec, make_map(naturals, '2^x + 1'), psi, window, 1e-9)
    assert result.certified
    assert result.lipschitz == 0.5
    assert result.fixed_point.start_distance == pytest.approx(1)
    assert value(result.solution, 3) == pytest.approx(8, abs=1e-8)
    assert all(row['dominated'] for row in result.profile)
    assert max(row['observed'] for row in result.profile) == pytest.approx(1, abs=1e-8)
    depth = result.depth
    assert all(row['depth'] == depth and row['orbit_room'] > depth for row in result.profile)
    assert result.profile[-1]['orbit_room'] == 64 - 8


def test_forward_stops_at_the_window_edge(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 2)
    f = make_map(naturals, '2^x + 1')
    psi = make_control(naturals, '1', arity=1)
    with pytest.raises(WindowExhausted) as e:
        solve_linear_forward(spec, f, psi, make_window(naturals, 0, 8), 1e-9)
    assert e.value.element == Element((9,))

    with pytest.raises(WindowExhausted) as e:
        solve_linear_forward(spec, f, psi, make_window(naturals, 0, 8, reach=12), 1e-9)
    assert e.value.element == Element((13,))
    assert e.value.depth == 4


def test_forward_without_contraction(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 1)
    with pytest.raises(NoCertificate) as e:
        solve_linear_forward(spec, make_map(naturals, '1'), make_control(naturals, '1', arity=1), make_window(naturals, 0, 8), 1e-9)
    assert e.value.details['sup_ratio'] == 1


def test_forward_needs_nonzero_p(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: x.index)
    with pytest.raises(PreconditionViolation):
        solve_linear_forward(spec, make_map(naturals, '1'), make_control(naturals, '1', arity=1), make_window(naturals, 0, 8), 1e-9)


def test_forward_needs_domination(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 2)
    with pytest.raises(HypothesisViolation) as e:
        solve_linear_forward(spec, make_map(naturals, '2^x + 1'), make_control(naturals, '0.5', arity=1), make_window(naturals, 0, 8), 1e-9)
    assert e.value.details['defect'] == pytest.approx(1)


def test_backward_on_a_cycle(mod8, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(mod8), lambda x: 0.5, lambda x: 1, 'backward')
    result = solve_linear_backward(spec, make_map(mod8, '3'), make_control(mod8, '0.5', arity=1), make_window(mod8, full=True), mod8, 1e-9)
    assert result.certified
    assert result.direction == 'backward'
    assert result.lipschitz == 0.5
    assert all(value(result.solution, x) == pytest.approx(2, abs=1e-8) for x in range(8))


def test_inverse_needs_a_permutation(mod8, make_window):
    window = make_window(mod8, full=True)
    collapse = LinearEquationSpec(lambda x: Element((0,)), lambda x: 0.5)
    with pytest.raises(PreconditionViolation) as e:
        inverse_map(collapse, window, mod8)
    assert e.value.condition == 'rho injective on the window'

    wrong = LinearEquationSpec(shift(mod8), lambda x: 0.5, rho_inverse=shift(mod8))
    with pytest.raises(PreconditionViolation):
        inverse_map(wrong, window, mod8)

    declared = LinearEquationSpec(shift(mod8), lambda x: 0.5, rho_inverse=shift(mod8, 7))
    assert inverse_map(declared, window, mod8)(Element((0,))) == Element((7,))


def test_pexider_linear(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 2)
    f, g = make_map(naturals, '2^x + 2^(-x)'), make_map(naturals, '2^x')
    result = solve_pexider_linear(spec, f, g, make_control(naturals, '2^(-x)', arity=1), make_window(naturals, 0, 8), 1e-9)
    assert result.psi_ratio == 0.25
    assert result.difference_ratio == 0.5
    assert result.forward.lipschitz == 0.5
    assert result.certified and result.stated_bound_holds
    assert value(result.forward.solution, 4) == pytest.approx(16, abs=1e-8)


def test_pexider_linear_needs_contracting_difference(naturals, make_map, make_control, make_window):
    spec = LinearEquationSpec(shift(naturals), lambda x: 2)
    f, g = make_map(naturals, '2^x + 1'), make_map(naturals, '2^x')
    with pytest.raises(HypothesisViolation) as e:
        solve_pexider_linear(spec, f, g, make_control(naturals, '1 + 2^(-x)', arity=1), make_window(naturals, 0, 8), 1e-9)
    assert e.value.condition.startswith('||f - g||')


def powers_family(naturals, make_control, window, Ls=(0.25, 0.0625, 0.015625)):
    rhos = [shift(naturals, k) for k in (1, 2, 3)]
    psis = [make_control(naturals, f'{2 ** (k + 1)}*2^(-x)', arity=1) for k in (1, 2, 3)]
    return family_from_constants(rhos, [2, 4, 8], psis, window, list(Ls))


def test_common_stability(naturals, make_map, make_control, make_window):
    window = make_window(naturals, 0, 12, reach=64)
    family, excluded = powers_family(naturals, make_control, window)
    assert not excluded and len(family) == 3 and family.constant

    result = solve_common_stability(family, make_map(naturals, '2^x'), window, 1e-9)
    assert result.certified
    assert result.fastest == 3
    assert result.conditions.lipschitz == {1: 0.25, 2: 0.0625, 3: 0.015625}
    assert all(c.met for c in result.conditions.cross)
    assert value(result.solution, 5) == pytest.approx(32)


def test_family_excludes_small_multipliers(naturals, make_control, make_window):
    window = make_window(naturals, 0, 8)
    psi = make_control(naturals, '2^(-x)', arity=1)
    family, excluded = family_from_constants([shift(naturals), shift(naturals)], [0.5, 2], [psi, psi], window)
    assert [m.index for m in family] == [2]
    assert family.members[0].L == 0.25
    assert excluded == [{'index': 1, 'reason': '|c_i| <= 1', 'c': 0.5 + 0j}]
    with pytest.raises(HypothesisViolation):
        family_from_constants([shift(naturals)], [1], [psi], window)


def test_family_spec_validation(naturals, make_control):
    psi = make_control(naturals, '1', arity=1)
    with pytest.raises(PreconditionViolation):
        FamilySpec([])
    with pytest.raises(PreconditionViolation):
        FamilySpec([FamilyMember(1, shift(naturals), lambda x: 2, psi, L=1.5)])


def test_family_must_commute(naturals, make_control, make_window):
    double = FamilyMember(2, lambda x: Element((2 * x.index,)), lambda x: 4, make_control(naturals, '8*2^(-x)', arity=1))
    step = FamilyMember(1, shift(naturals), lambda x: 2, make_control(naturals, '4*2^(-x)', arity=1))
    with pytest.raises(HypothesisViolation) as e:
        check_common_conditions(FamilySpec([step, double]), make_window(naturals, 0, 12))
    assert e.value.condition == 'commuting'


def test_J_set(naturals, make_map, make_control, make_window):
    g = make_map(naturals, '2^x')
    report = find_J_set(g, make_control(naturals, '2^(-x)*2^(-y)'), make_window(naturals, 0, 8), naturals)
    assert [m.index for m in report.members] == [Element((i,)) for i in range(1, 9)]
    assert report.excluded == [{'element': Element((0,)), 'reason': '|g(i)| <= 1'}]
    assert report.members[1].L == pytest.approx(1 / 16)
    assert report.rows()[0]['g'] == 2


def test_exponential_via_common(naturals, make_map, make_control, make_window):
    f = make_map(naturals, '2^x')
    phi = make_control(naturals, '2^(-x)*2^(-y)')
    window = make_window(naturals, 0, 6, reach=64)
    result = exponential_via_common(f, f, phi, window, naturals, 1e-9, n_max=64, threshold=10)
    assert result.verdict == Verdict.HYPERSTABLE
    assert sorted(result.common.members) == [Element((i,)) for i in range(1, 7)]
    assert result.to_json()['truncated'] == 0
    assert result.identity_residual == 0

    capped = exponential_via_common(f, f, phi, window, naturals, 1e-9, n_max=64, threshold=10, limit=2)
    assert len(capped.common.members) == 2
    assert capped.truncated == 4

    with pytest.raises(HypothesisViolation) as e:
        exponential_via_common(f, f, phi, window, naturals, 1e-9, threshold=1e6)
    assert e.value.condition == 'g unbounded on the window'


def test_constant_control_bounds():
    assert hu_bound_forward(2, 1) == 2
    assert hu_bound_backward(0.5, 1) == 2
    with pytest.raises(PreconditionViolation):
        hu_bound_forward(1, 1)
    with pytest.raises(PreconditionViolation):
        hu_bound_backward(0.5, -1)


@pytest.mark.parametrize('p,a,k,expected', [(1, 2, 0.5, 4), (-1, 2, 3, 0.25), (0, 0.5, 3, 0.5)])
def test_homogeneous_bound(p, a, k, expected):
    assert homogeneous_bound(2, p, a, k) == pytest.approx(expected)


@pytest.mark.parametrize('p,a,k', [(1, 2, 3), (1, 2, 1), (-1, 2, 0.5)])
def test_homogeneous_bound_rejects_signs(p, a, k):
    with pytest.raises(PreconditionViolation):
        homogeneous_bound(2, p, a, k)


@hyp.given(st.integers(0, 12), st.integers(0, 12), st.integers(1, 40))
def test_products_split_along_the_orbit(n, m, start):
    domain = SemigroupDomain('naturals-add', extent=1024)
    member = FamilyMember(1, shift(domain), lambda x: x.index + 0.5j, ControlFunction.constant('psi', 1, 1.0), L=0.5)
    x = Element((start,))
    assert member.P(n + m, x) == pytest.approx(member.P(n, x) * member.P(m, Element((start + n,))), rel=1e-9)
    assert member.log_P(n, x) == pytest.approx(math.log(abs(member.P(n, x))), abs=1e-9)
    assert member.theta(n, x) == pytest.approx((1 - 0.5 ** n) * 2 / abs(x.index + 0.5j))
