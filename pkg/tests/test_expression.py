import cmath
import math
from fractions import Fraction

import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from ext.errors import EvaluationError, ExpressionSyntaxError, UnknownIdentifier
from ext.expression import BinaryOp, Call, Expression, Negate, Number, Variable, parse, to_source

leaves = st.one_of(
    st.integers(min_value=0, max_value=99).map(lambda i: Number(str(i))),
    st.sampled_from(['x', 'y', 'n']).map(Variable),
)
trees = st.recursive(
    leaves,
    lambda inner: st.one_of(
        inner.map(Negate),
        st.builds(BinaryOp, st.sampled_from('+-*/^'), inner, inner),
        inner.map(lambda a: Call('exp', (a,))),
    ),
    max_leaves=12,
)


@hyp.given(trees)
def test_printed_tree_reparses(tree):
    assert parse(to_source(tree)) == tree


@pytest.mark.parametrize('source,printed', [
    ('(x + y) + n', 'x + y + n'),
    ('x - (y - n)', 'x - (y - n)'),
    ('(2^x)^y', '(2^x)^y'),
    ('2^(x^y)', '2^x^y'),
    ('-(x^2)', '-x^2'),
    ('(-x)^2', '(-x)^2'),
    ('x * (-y)', 'x * -y'),
])
def test_minimal_parentheses(source, printed):
    assert to_source(parse(source)) == printed


def test_power_is_right_associative():
    assert parse('2^3^2') == BinaryOp('^', Number('2'), BinaryOp('^', Number('3'), Number('2')))
    assert Expression('2^3^2')({}) == 512


def test_unary_minus_binds_looser_than_power():
    assert Expression('-2^2')({}) == -4
    assert Expression('2^-1')({}) == 0.5


def test_unknown_identifier_offset():
    with pytest.raises(UnknownIdentifier) as e:
        parse('x + z', ['x'])
    assert e.value.name == 'z'
    assert e.value.offset == 4
    assert e.value.verdict == 'config-error'


def test_unknown_function():
    with pytest.raises(UnknownIdentifier) as e:
        parse('foo(x)')
    assert e.value.offset == 0


@pytest.mark.parametrize('source,offset', [
    ('x +', 3),
    ('(x', 2),
    ('x $ y', 2),
    ('', 0),
    ('exp', 3),
])
def test_syntax_error_offsets(source, offset):
    with pytest.raises(ExpressionSyntaxError) as e:
        parse(source)
    assert e.value.offset == offset
    assert e.value.expected == sorted(e.value.expected)


def test_arity_is_checked():
    with pytest.raises(ExpressionSyntaxError):
        parse('pow(x)')
    assert isinstance(parse('max(x, y, n)'), Call)


def test_constants_and_functions():
    assert Expression('exp(i*pi)')({}) == pytest.approx(-1)
    assert Expression('ln(e)')({}) == pytest.approx(1)
    assert Expression('sqrt(-4)')({}) == pytest.approx(2j)
    assert Expression('abs(3 - 4*i)')({}) == 5
    assert Expression('min(3, 1, 2) + max(3, 1, 2)')({}) == 4


def test_gamma():
    gamma = Expression('gamma(x)', ['x'])
    assert gamma({'x': 5.0}) == 24
    assert gamma({'x': 0.5}).real == pytest.approx(math.sqrt(math.pi))
    with pytest.raises(EvaluationError):
        gamma({'x': 0.0})
    with pytest.raises(EvaluationError):
        gamma({'x': 1j})


def test_ln_is_principal():
    value = Expression('ln(-1)')({})
    assert value.imag == pytest.approx(math.pi)
    with pytest.raises(EvaluationError):
        Expression('ln(0)')({})


def test_division_by_zero():
    with pytest.raises(EvaluationError):
        Expression('1/x', ['x'])({'x': 0})


def test_real_rejects_complex():
    assert Expression('2*x', ['x']).real({'x': 1.5}) == 3
    with pytest.raises(EvaluationError):
        Expression('i*x', ['x']).real({'x': 1})


def test_exact_evaluation():
    expr = Expression('x/3 + abs(-x)^2', ['x'])
    assert expr.exact({'x': Fraction(1, 2)}) == Fraction(1, 6) + Fraction(1, 4)
    with pytest.raises(EvaluationError):
        Expression('exp(x)', ['x']).exact({'x': Fraction(0)})
    with pytest.raises(EvaluationError):
        Expression('2^(1/2)').exact({})


def test_bind_params():
    expr = Expression('delta * x', ['x', 'delta']).bind({'delta': 0.5})
    assert expr({'x': 4}) == 2
    assert expr.identifiers == {'x', 'delta'}
    assert str(expr) == 'delta * x'


def test_negative_base_integer_power_stays_real():
    assert Expression('(-2)^3')({}) == -8
    assert Expression('(-8)^(1/3)')({}) == pytest.approx(cmath.exp(cmath.log(-8) / 3))


def test_roots_of_negatives_take_the_principal_branch():
    assert math.copysign(1, Expression('-4')({}).imag) == 1
    assert Expression('(-1)^0.5')({}) == pytest.approx(1j)
    assert Expression('(-8)^(1/3)')({}) == pytest.approx(1 + math.sqrt(3) * 1j)
    assert Expression('sqrt(-x)', ['x'])({'x': 4 + 0j}) == pytest.approx(2j)
    assert Expression('sqrt(x)', ['x'])({'x': complex(-9, -0.0)}) == pytest.approx(3j)
