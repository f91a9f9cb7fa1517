from __future__ import annotations

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ext.algebra import ROUNDOFF

__all__ = ('format_duration', 'within', 'fit_limit', 'limit_is_zero', 'grows_unboundedly', 'ratio_test', 'partial_sums')

# shortest tail a zero limit may be certified from
MIN_TAIL = 64


def format_duration(seconds: float) -> str:
    if seconds < 1:
        return f'{seconds * 1000:.0f} ms'

    minutes, seconds = divmod(seconds, 60)
    hours, minutes = divmod(int(minutes), 60)

    fmt = f'{seconds:.2f} seconds'
    if minutes:
        fmt = f'{minutes} minutes ' + fmt
    if hours:
        fmt = f'{hours} hours ' + fmt
    return fmt


def within(residual: float, allowed: float, magnitude: float=0.0) -> bool:
    """residual <= allowed, plus a rounding allowance for values of size ``magnitude``"""
    return residual <= allowed + ROUNDOFF * magnitude


def fit_limit(sequence: Sequence[float], start: int=1) -> Tuple[float, float]:
    """Estimates lim s_n from the last quarter of a sequence.

    Fits c0 + c1/n + c2 ln(n)/n by least squares, where ``start`` is the
    index n of the first term. Returns (max(c0, 0), plain tail mean).
    """
    values = np.asarray(sequence, dtype=float)
    if values.size == 0:
        return math.nan, math.nan
    if not np.all(np.isfinite(values)):
        return math.inf, math.inf
    tail_start = (3 * values.size) // 4
    tail = values[tail_start:]
    mean = float(tail.mean())
    if tail.size < 3:
        return max(mean, 0.0), mean
    n = np.arange(start + tail_start, start + values.size, dtype=float)
    basis = np.column_stack([np.ones_like(n), 1 / n, np.log(n) / n])
    coefficients = np.linalg.lstsq(basis, tail, rcond=None)[0]
    return max(float(coefficients[0]), 0.0), mean


def limit_is_zero(limit: float, tail_tol: float, first: float, length: int) -> bool:
    return length >= MIN_TAIL and limit <= tail_tol * max(1.0, abs(first))


def grows_unboundedly(norms: Sequence[float], threshold: float) -> bool:
    """sup exceeds ``threshold`` and the outer half outgrows the inner half.

    ``norms`` must be ordered by element magnitude.
    """
    if len(norms) < 2:
        return False
    middle = len(norms) // 2
    inner, outer = max(norms[:middle]), max(norms[middle:])
    return max(inner, outer) > threshold and outer > inner


def ratio_test(terms: Sequence[float], last: int=8, ratio: float=0.95) -> Tuple[bool, Optional[float]]:
    """Series convergence heuristic: the last ``last`` terms decay with ratio <= ``ratio``"""
    if all(t == 0 for t in terms):
        return True, 0.0
    tail = list(terms[-(last + 1):])
    if len(tail) < 2:
        return False, None
    worst = 0.0
    for a, b in zip(tail, tail[1:]):
        if a == 0:
            if b != 0:
                return False, math.inf
            continue
        worst = max(worst, b / a)
    return worst <= ratio, worst


def partial_sums(terms: Sequence[float]) -> List[float]:
    return [float(s) for s in np.cumsum(terms)]
