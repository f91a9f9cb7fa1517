import math

import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from conftest import expression
from ext.algebra import AlgebraSpec
from ext.errors import ControlError, HypothesisViolation
from ext.functions import (ControlFunction, DomainMap, FunctionMap, ScalarMap, derive_pexider_additive_controls,
                           derive_pexider_exponential_controls, noise_correlation, sup_defect)
from ext.semigroup import Element, SemigroupDomain


def test_function_map_memoizes():
    calls = []
    spec = AlgebraSpec()

    def fn(e):
        calls.append(e)
        return spec.scalar(e.index)

    f = FunctionMap('f', fn, spec)
    assert f(Element((3,))) == f(Element((3,)))
    assert calls == [Element((3,))]


def test_perturbation_is_deterministic(naturals, make_map, make_window):
    window = make_window(naturals, 0, 200)
    first = make_map(naturals, '2^x', envelope='2^(-x)', seed=4)
    second = make_map(naturals, '2^x', envelope='2^(-x)', seed=4)
    assert [first(e) for e in window] == [second(e) for e in reversed(list(window))][::-1]


def test_perturbation_stays_inside_envelope(reals, make_map, make_window):
    window = make_window(reals, -4, 4)
    f = make_map(reals, 'x', envelope='0.1 + abs(x)', seed=1)
    f.check_envelope(window)
    for e in window:
        assert (f(e) - f.base(e)).norm() <= (0.1 + reals.magnitude(e)) * (1 + 1e-12)


def test_different_seeds_decorrelate(make_map, make_window):
    naturals = SemigroupDomain('naturals-add', extent=1024)
    window = make_window(naturals, 0, 999)
    first = make_map(naturals, '0', envelope='1', seed=1)
    second = make_map(naturals, '0', envelope='1', seed=2)
    assert abs(noise_correlation(first, second, window)) < 0.2
    assert noise_correlation(first, first, window) == pytest.approx(1)


@pytest.mark.parametrize('norm', ['max', 'euclidean'])
def test_independent_components(naturals, make_map, make_window, norm):
    spec = AlgebraSpec(2, norm)
    shared = make_map(naturals, '0', spec=spec, envelope='1', seed=3)
    independent = make_map(naturals, '0', spec=spec, envelope='1', seed=3, components='independent')
    window = make_window(naturals, 0, 50)
    for e in window:
        a, b = shared(e).components
        assert a == b
        assert independent(e).norm() <= 1 + 1e-12
    assert any(len(set(independent(e).components)) == 2 for e in window)


def test_zero_envelope_adds_nothing(naturals, make_map):
    f = make_map(naturals, 'x^2', envelope='0', seed=9)
    assert f(Element((7,))) == f.base(Element((7,)))


def test_overflow_is_flagged(naturals, make_map):
    f = make_map(naturals, 'exp(x)')
    assert f(Element((1000,))).overflowed
    assert math.isinf(f(Element((1000,))).norm())


def test_control_rejects_negative_values(naturals, make_control, make_window):
    psi = make_control(naturals, 'x - 5', arity=1)
    assert psi(Element((7,))) == 2
    with pytest.raises(ControlError) as e:
        psi.verify_nonnegative(make_window(naturals, 0, 8))
    assert e.value.verdict == 'hypotheses-not-met'


def test_control_rejects_complex_values(naturals, make_control):
    psi = make_control(naturals, 'i*x')
    with pytest.raises(ControlError):
        psi(Element((1,)), Element((1,)))


def test_undefined_control_is_infinite(naturals, make_control):
    psi = make_control(naturals, 'abs(x)^(-1) + abs(y)')
    assert psi(Element((0,)), Element((2,))) == math.inf
    assert psi(Element((2,)), Element((2,))) == 2.5


@hyp.given(st.integers(0, 100), st.integers(0, 100))
def test_control_algebra(x, y):
    one = ControlFunction.constant('one', 2, 1.0)
    product = ControlFunction('xy', 2, lambda a, b: float(a.index * b.index))
    total = one + product
    a, b = Element((x,)), Element((y,))
    assert total(a, b) == 1 + x * y
    assert product.partial(a)(b) == x * y


def test_control_arity():
    with pytest.raises(ValueError):
        ControlFunction('psi', 3, lambda *_: 0.0)
    with pytest.raises(ValueError):
        ControlFunction.constant('a', 1, 1.0) + ControlFunction.constant('b', 2, 1.0)


def test_pexider_additive_controls(naturals, make_control):
    psi = make_control(naturals, 'x + 2*y')
    e = naturals.identity
    tilde, hat = derive_pexider_additive_controls(psi, e, naturals)
    x, y = Element((3,)), Element((5,))
    assert tilde(x, y) == 13 + 3 + 10
    assert hat(x, y) == 8 + 3 + 10


def test_pexider_exponential_controls(naturals, make_map, make_control):
    psi = make_control(naturals, '1')
    g = make_map(naturals, '2^x')
    tilde, hat = derive_pexider_exponential_controls(psi, g, naturals.identity, naturals)
    assert tilde(Element((3,)), Element((1,))) == 1 + 8
    assert hat(Element((3,)), Element((1,))) == 2
    with pytest.raises(HypothesisViolation):
        derive_pexider_exponential_controls(psi, make_map(naturals, '3'), naturals.identity, naturals)


def test_domain_map(naturals, reals):
    rho = DomainMap('rho', [expression(naturals, 'x + 1')], naturals)
    assert rho(Element((3,))) == Element((4,))
    assert rho.iterate(Element((3,)), 5) == Element((8,))
    halve = DomainMap('rho', [expression(reals, 'x/2')], reals)
    assert halve(Element((6,))) == Element((3,))


def test_scalar_map_constant(naturals):
    k = ScalarMap.constant('k', 0.5 - 2j, naturals)
    assert k(Element((1,))) == 0.5 - 2j


def test_sup_defect():
    spec = AlgebraSpec()
    pairs = [(Element((i,)), Element((j,))) for i in range(4) for j in range(4)]
    defect = sup_defect(lambda x, y: spec.scalar(x.index - y.index), pairs)
    assert defect.value == 3
    assert defect.pair == (Element((0,)), Element((3,)))
    assert defect.to_json()['argmax'] == ['0', '3']
    big = sup_defect(lambda x, y: spec.scalar(1e200) * 1e200, pairs)
    assert big.overflowed and big.to_json()['sup'] == 'inf'
