import math

import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from ext.algebra import AlgebraSpec, generalized_metric, hat_lift, in_M, principal, sup_norm, tabulate
from ext.errors import ConfigurationError
from ext.semigroup import Element

small = st.floats(min_value=-1e6, max_value=1e6, allow_nan=False)
complexes = st.builds(complex, small, small)
specs = st.sampled_from([AlgebraSpec(), AlgebraSpec(2, 'max'), AlgebraSpec(3, 'euclidean')])


def values(spec):
    return st.lists(complexes, min_size=spec.dimension, max_size=spec.dimension).map(spec.make)


@st.composite
def value_pairs(draw):
    spec = draw(specs)
    return draw(values(spec)), draw(values(spec)), draw(complexes)


@hyp.given(value_pairs())
def test_norm_axioms(case):
    u, v, c = case
    assert u.norm() >= 0
    assert (u - u).norm() == 0
    assert (u + v).norm() <= u.norm() + v.norm() + 1e-9 * (u.norm() + v.norm())
    assert (u * c).norm() == pytest.approx(abs(c) * u.norm(), rel=1e-9, abs=1e-9)


@hyp.given(value_pairs())
def test_max_norm_is_submultiplicative(case):
    u, v, _ = case
    assert (u * v).norm() <= u.norm() * v.norm() * (1 + 1e-12) + 1e-300


def test_spec_validation():
    with pytest.raises(ConfigurationError):
        AlgebraSpec(2, 'modulus')
    with pytest.raises(ConfigurationError) as e:
        AlgebraSpec(0, 'taxicab')
    assert len(e.value.problems) == 2
    assert AlgebraSpec.from_config({'dimension': 2}).norm == 'max'
    assert AlgebraSpec.from_config({}).multiplicative


def test_overflow_is_flagged():
    spec = AlgebraSpec()
    big = spec.scalar(1e200)
    assert (big * big).overflowed
    assert math.isinf((big * big).norm())
    assert spec.scalar(1000).exp().overflowed
    assert not spec.scalar(1).exp().overflowed


def test_unit_multiples():
    spec = AlgebraSpec(2, 'max')
    g = {Element((0,)): spec.scalar(3j), Element((1,)): spec.make([1, 2])}
    assert in_M(g.__getitem__, Element((0,)))
    assert hat_lift(g.__getitem__, Element((0,))) == 3j
    assert not in_M(g.__getitem__, Element((1,)))


def test_principal_branch():
    assert principal(complex(1, 2.5 * math.pi)).imag == pytest.approx(math.pi / 2)
    assert principal(complex(0, -math.pi)).imag == pytest.approx(math.pi)
    assert principal(1 + 1j) == 1 + 1j


window = [Element((i,)) for i in range(10)]
spec = AlgebraSpec()
maps = st.lists(complexes, min_size=10, max_size=10).map(lambda cs: {e: spec.scalar(c) for e, c in zip(window, cs)})


@hyp.given(maps, maps, maps)
def test_metric_axioms(u, v, w):
    one = lambda y: 1.0  # noqa: E731
    d_uv = generalized_metric(u, v, one, window).value
    assert generalized_metric(u, u, one, window).value == 0
    assert d_uv == generalized_metric(v, u, one, window).value
    through = generalized_metric(u, w, one, window).value + generalized_metric(w, v, one, window).value
    assert d_uv <= through * (1 + 1e-12) + 1e-9


def test_metric_zero_weight():
    u = {e: spec.scalar(1) for e in window}
    v = {e: spec.scalar(1 if e.index else 2) for e in window}
    weight = lambda y: float(y.index)  # noqa: E731
    distance = generalized_metric(u, v, weight, window)
    assert distance.value == math.inf
    assert distance.witness == Element((0,))
    assert generalized_metric(u, u, weight, window).value == 0


def test_metric_witness_and_weight():
    u = {e: spec.scalar(e.index) for e in window}
    zero = {e: spec.zero for e in window}
    distance = generalized_metric(u, zero, lambda y: 2.0, window)
    assert distance.value == 4.5
    assert distance.witness == Element((9,))
    assert distance.finite


def test_metric_roundoff_floor():
    u = {e: spec.scalar(1e10) for e in window}
    v = {e: spec.scalar(1e10 + 1e-5) for e in window}
    one = lambda y: 1.0  # noqa: E731
    assert generalized_metric(u, v, one, window).value > 0
    assert generalized_metric(u, v, one, window, roundoff=True).value == 0


def test_sup_norm_and_tabulate():
    u = {e: spec.scalar(-e.index) for e in window}
    largest = sup_norm(u, window)
    assert largest.value == 9 and largest.witness == Element((9,))
    assert tabulate(u.__getitem__, window) == u
