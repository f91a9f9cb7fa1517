import math

import hypothesis as hyp
import pytest
from hypothesis import strategies as st

from ext.utility import MIN_TAIL, fit_limit, format_duration, grows_unboundedly, limit_is_zero, partial_sums, ratio_test, within


def test_format_duration():
    assert format_duration(0.25) == '250 ms'
    assert format_duration(75) == '1 minutes 15.00 seconds'
    assert format_duration(3725) == '1 hours 2 minutes 5.00 seconds'


def test_within_allows_roundoff():
    assert within(1.0, 1.0)
    assert not within(1.0 + 1e-9, 1.0)
    assert within(1.0 + 1e-9, 1.0, magnitude=1e6)


@hyp.given(st.floats(min_value=-10, max_value=10), st.floats(min_value=-10, max_value=10))
def test_fit_limit_recovers_the_constant(c0, c1):
    n = range(1, 1025)
    limit, _ = fit_limit([c0 + c1 / k + math.log(k) / k for k in n])
    assert limit == pytest.approx(max(c0, 0), abs=1e-4)


def test_fit_limit_edge_cases():
    assert math.isnan(fit_limit([])[0])
    assert fit_limit([1.0, math.inf]) == (math.inf, math.inf)
    assert fit_limit([2.0, 2.0]) == (2.0, 2.0)


def test_limit_is_zero_needs_a_long_tail():
    assert limit_is_zero(0.0, 1e-6, 5.0, MIN_TAIL)
    assert not limit_is_zero(0.0, 1e-6, 5.0, MIN_TAIL - 1)
    assert not limit_is_zero(1e-3, 1e-6, 5.0, MIN_TAIL)


def test_grows_unboundedly():
    assert grows_unboundedly([1, 2, 4, 1e7], 1e6)
    assert not grows_unboundedly([1, 2, 4, 8], 1e6)
    assert not grows_unboundedly([1e7, 1, 1, 1], 1e6)
    assert not grows_unboundedly([1e7], 1e6)


def test_ratio_test():
    assert ratio_test([2.0 ** -k for k in range(20)]) == (True, 0.5)
    converges, worst = ratio_test([1.0 / (k + 1) for k in range(100)])
    assert not converges and worst > 0.95
    assert ratio_test([0.0] * 5) == (True, 0.0)
    assert ratio_test([1.0]) == (False, None)
    assert ratio_test([0.0, 1.0]) == (False, math.inf)


def test_partial_sums():
    assert partial_sums([1, 2, 3]) == [1.0, 3.0, 6.0]
