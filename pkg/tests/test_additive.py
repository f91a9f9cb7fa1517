import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from cogs.additive import (BasePair, asymptotic_scan, check_additive_superstability, check_hyperstability_conditions, check_logarithmic,
                           compute_defect_additive, default_base_pairs, hyperstability_verdict, jensen_reduction, midpoint, rho_function,
                           stabilize_pexider_additive)
from ext.errors import HypothesisViolation, PreconditionViolation, RepresentabilityError
from ext.functions import ControlFunction
from ext.report import Verdict
from ext.semigroup import Element, SemigroupDomain, Window, to_fraction

PRODUCT = 'abs(x)^(-2)*abs(y)'


@pytest.fixture
def positive(naturals, make_window):
    return make_window(naturals, 1, 8)


def conditions(psi, window, domain, tail_tol=1e-4):
    return check_hyperstability_conditions(psi, default_base_pairs(window, domain), domain, 512, tail_tol)


def test_exact_additive_map_has_no_defect(naturals, make_map, make_window):
    f = make_map(naturals, '3*x')
    assert compute_defect_additive(f, f, f, make_window(naturals, 0, 8), naturals).value == 0


def test_default_base_pairs(naturals, make_window):
    pairs = default_base_pairs(make_window(naturals, 0, 8), naturals)
    assert {p.x0 for p in pairs} == {Element((1,))}
    assert [(p.x.index, p.y.index) for p in pairs] == [(1, 5), (5, 8), (8, 1)]
    with pytest.raises(PreconditionViolation):
        default_base_pairs(make_window(naturals, 0, 0), naturals)


@pytest.mark.parametrize('source,met', [
    ('0', True),
    (PRODUCT, True),
    ('abs(x)^(-1)*abs(y)^(-1)', True),
    ('0.1', False),
    ('0.1*(abs(x)^(-1) + abs(y))', False),
])
def test_hyperstability_conditions(naturals, make_control, positive, source, met):
    report = conditions(make_control(naturals, source), positive, naturals)
    assert report.met is met
    assert report.verdict == (Verdict.CONDITIONS_MET if met else Verdict.CONDITIONS_NOT_MET)
    if not met:
        assert report.offending.limit > 1e-4


def test_constant_control_limit_is_the_constant(naturals, make_control, positive):
    report = conditions(make_control(naturals, '0.1'), positive, naturals)
    assert report.offending.condition == 'i'
    assert report.offending.limit == pytest.approx(0.1, rel=1e-6)


@hyp.settings(max_examples=10, deadline=None)
@hyp.given(st.floats(min_value=0, max_value=1))
def test_conditions_are_monotone_in_the_control(scale):
    domain = SemigroupDomain('naturals-add', extent=1024)
    window = Window([Element((i,)) for i in range(1, 9)])
    larger = ControlFunction('psi', 2, lambda x, y: float(y.index) / x.index ** 2)
    smaller = ControlFunction('s*psi', 2, lambda x, y: scale * larger(x, y))
    pairs = default_base_pairs(window, domain)
    assert check_hyperstability_conditions(larger, pairs, domain, 512, 1e-4).met
    assert check_hyperstability_conditions(smaller, pairs, domain, 512, 1e-4).met


def test_conditions_preconditions(naturals, make_control):
    psi = make_control(naturals, '0')
    one = Element((1,))
    with pytest.raises(PreconditionViolation):
        check_hyperstability_conditions(psi, [BasePair(one, one, one, one)], naturals, n_max=10)
    with pytest.raises(PreconditionViolation):
        check_hyperstability_conditions(psi, [BasePair(naturals.identity, one, one, one)], naturals)


def test_hyperstable_map_is_certified(naturals, make_map, make_control, positive):
    psi = make_control(naturals, PRODUCT)
    report = conditions(psi, positive, naturals)
    verdict, witness = hyperstability_verdict(make_map(naturals, '3*x'), psi, report, positive, naturals, 1e-9)
    assert verdict == Verdict.HYPERSTABLE and witness is None


def test_undominated_map_is_rejected(naturals, make_map, make_control, positive):
    psi = make_control(naturals, PRODUCT)
    report = conditions(psi, positive, naturals)
    with pytest.raises(HypothesisViolation):
        hyperstability_verdict(make_map(naturals, 'x^2'), psi, report, positive, naturals, 1e-9)


def test_additive_superstability(naturals, make_map, make_control, make_window):
    window = make_window(naturals, 0, 6)
    result = check_additive_superstability(make_map(naturals, 'x'), make_control(naturals, '0'), make_control(naturals, '6', arity=1),
                                           Element((1,)), window, naturals, 1e-9)
    assert result.verdict == Verdict.CAUCHY
    assert result.stabilizer.certified
    assert result.exp_domination <= 1


def test_superstability_needs_positive_f_at_p(naturals, make_map, make_control, make_window):
    with pytest.raises(PreconditionViolation):
        check_additive_superstability(make_map(naturals, '-x'), make_control(naturals, '0'), make_control(naturals, '6', arity=1),
                                      Element((1,)), make_window(naturals, 0, 6), naturals, 1e-9)


def test_superstability_needs_psi_to_bound_f(naturals, make_map, make_control, make_window):
    with pytest.raises(HypothesisViolation) as e:
        check_additive_superstability(make_map(naturals, 'x'), make_control(naturals, '0'), make_control(naturals, '2', arity=1),
                                      Element((1,)), make_window(naturals, 0, 6), naturals, 1e-9)
    assert e.value.condition == '|f| <= psi'


@pytest.mark.parametrize('p', ['2', '0.5'])
def test_logarithm_is_certified(make_map, make_control, make_window, p):
    domain = SemigroupDomain('reals-positive-mul-grid')
    result = check_logarithmic(make_map(domain, 'ln(x)'), make_control(domain, '0'), make_control(domain, '2.1', arity=1),
                               domain.from_value(to_fraction(p)), make_window(domain, 0.125, 8), domain, 1e-9)
    assert result.verdict == Verdict.LOGARITHMIC


def test_logarithm_needs_nonzero_value_at_p(make_map, make_control, make_window):
    domain = SemigroupDomain('reals-positive-mul-grid')
    with pytest.raises(PreconditionViolation):
        check_logarithmic(make_map(domain, 'ln(x)'), make_control(domain, '0'), make_control(domain, '2.1', arity=1),
                          domain.from_value(1), make_window(domain, 0.125, 8), domain, 1e-9)


def test_rho_functions(reals):
    x, y = reals.from_value(-1), reals.from_value(3)
    assert rho_function('rho1', reals)(x, y) == 4
    assert rho_function('rho2', reals)(x, y) == 2
    assert rho_function('rho3', reals)(x, y) == 3
    with pytest.raises(PreconditionViolation):
        rho_function('rho4', reals)


def test_skof_map_is_not_asymptotically_additive(reals, make_map, make_window):
    f = make_map(reals, 'x + exp(-abs(x))')
    result = asymptotic_scan(f, f, f, rho_function('rho1', reals), make_window(reals, -5, 5), reals, 1e-9)
    assert result.verdict == Verdict.NOT_ASYMPTOTIC
    assert result.witness['on_ray']
    assert result.witness['defect'] == pytest.approx(1)
    pair = result.witness['pair']
    assert 0 in pair and max(abs(v) for v in pair) == 5
    assert result.profile.tail['sup_defect'] > 0.5


def test_additive_map_is_certified_by_the_scan(reals, make_map, make_window):
    f = make_map(reals, '3*x')
    result = asymptotic_scan(f, f, f, rho_function('rho3', reals), make_window(reals, -5, 5), reals, 1e-9)
    assert result.verdict == Verdict.ADDITIVE
    assert len(result.profile.radii) == 8


def test_radii_must_increase(reals, make_map, make_window):
    f = make_map(reals, '3*x')
    with pytest.raises(PreconditionViolation):
        asymptotic_scan(f, f, f, rho_function('rho1', reals), make_window(reals, -1, 1), reals, 1e-9, radii=[0, 2, 1])


PEXIDER = 'eps*abs(x)*abs(y)/((1 + abs(x))^3*(1 + abs(y))^3)'


def test_pexider_additive(naturals, make_map, make_control, make_window):
    f = make_map(naturals, '3*x')
    psi = make_control(naturals, PEXIDER, params={'eps': 0.1})
    result = stabilize_pexider_additive(f, f, f, psi, make_window(naturals, 0, 8), naturals, 1e-9, tail_tol=1e-4)
    assert result.verdict == Verdict.PEXIDER
    assert set(result.residuals) == {'f additive', 'g additive', 'h additive', 'f(x+y) = g(x) + h(y)'}


def test_pexider_constant_control(naturals, make_map, make_control, make_window):
    f = make_map(naturals, '3*x')
    result = stabilize_pexider_additive(f, f, f, make_control(naturals, '0.1'), make_window(naturals, 0, 8), naturals, 1e-9, tail_tol=1e-4)
    assert result.verdict == Verdict.CONDITIONS_NOT_MET


def test_pexider_needs_g_at_identity_zero(naturals, make_map, make_control, make_window):
    f = make_map(naturals, '3*x')
    g = make_map(naturals, '3*x + 1')
    with pytest.raises(PreconditionViolation):
        stabilize_pexider_additive(f, g, f, make_control(naturals, '1'), make_window(naturals, 0, 8), naturals, 1e-9)


def test_jensen_reduction(reals, make_map, make_window):
    J = make_map(reals, 'x^2')
    reduction = jensen_reduction(J, make_window(reals, elements=[2, 4]), reals)
    assert reduction.exact
    row = next(r for r in reduction.table if (r['x'], r['y']) == (reals.from_value(2), reals.from_value(4)))
    assert row['jensen'] == row['pexider'] == -2


def test_jensen_defect_matches_the_pexider_sup(reals, make_map, make_window):
    J = make_map(reals, 'x^2')
    window = make_window(reals, elements=[-2, 1, 2, 4])
    reduction = jensen_reduction(J, window, reals)
    assert reduction.exact and reduction.unrepresentable == 0
    assert reduction.sup == pytest.approx(compute_defect_additive(reduction.f, J, J, window, reals).value)
    assert reduction.sup == pytest.approx(18)


def test_midpoint_is_taken_on_values(reals):
    assert midpoint(reals.from_value(-1), reals.from_value(2), reals) == reals.from_value(to_fraction('1/2'))
    with pytest.raises(RepresentabilityError):
        midpoint(reals.from_value(0), reals.from_value(to_fraction('1/4')), reals)
    vectors = SemigroupDomain('vector-naturals-k', dimension=2, extent=16)
    assert midpoint(Element((1, 4)), Element((3, 0)), vectors) == Element((2, 2))
    with pytest.raises(RepresentabilityError):
        midpoint(Element((0,)), Element((2,)), SemigroupDomain('integers-mod-m', modulus=4))


def test_jensen_skips_unrepresentable_midpoints(reals, make_map, make_window):
    reduction = jensen_reduction(make_map(reals, '3*x'), make_window(reals, -1, 1), reals)
    assert reduction.exact
    assert reduction.unrepresentable > 0


def test_jensen_needs_J_at_zero_zero(reals, make_map, make_window):
    with pytest.raises(PreconditionViolation):
        jensen_reduction(make_map(reals, '3*x + 1'), make_window(reals, -1, 1), reals)
