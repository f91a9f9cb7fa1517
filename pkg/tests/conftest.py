import json
from pathlib import Path
from typing import Any, Callable, Dict, Optional

import pytest

from ext.algebra import AlgebraSpec
from ext.expression import Expression
from ext.functions import ApproximateMap, ControlFunction, Perturbation
from ext.semigroup import SemigroupDomain, Window, enumerate_window
from lab import ulamlab

SCENARIOS = Path(__file__).resolve().parent.parent / 'scenarios'


def expression(domain: SemigroupDomain, source: str, arity: int=1, params: Optional[Dict[str, float]]=None) -> Expression:
    params = params or {}
    names = domain.variable_names('x') + list(params)
    if arity == 2:
        names += domain.variable_names('y')
    return Expression(source, names).bind(params)


@pytest.fixture(scope='session')
def lab() -> ulamlab:
    return ulamlab(dev_mode=False)


@pytest.fixture
def naturals() -> SemigroupDomain:
    return SemigroupDomain('naturals-add', extent=512)


@pytest.fixture
def reals() -> SemigroupDomain:
    return SemigroupDomain.from_config({'kind': 'reals-add-grid', 'step': 0.25, 'extent': 64})


@pytest.fixture
def make_window() -> Callable[..., Window]:
    def make(domain: SemigroupDomain, start: Any=None, stop: Any=None, **spec: Any) -> Window:
        if start is not None:
            spec.update(start=start, stop=stop)
        return enumerate_window(domain, spec)
    return make


@pytest.fixture
def make_map() -> Callable[..., ApproximateMap]:
    def make(domain: SemigroupDomain, *sources: str, spec: AlgebraSpec=None, envelope: str=None, seed: int=0,
             params: Optional[Dict[str, float]]=None, components: str='shared') -> ApproximateMap:
        spec = spec or AlgebraSpec()
        perturbation = None
        if envelope is not None:
            perturbation = Perturbation(expression(domain, envelope, params=params), seed, 'complex', components)
        return ApproximateMap('f', [expression(domain, s, params=params) for s in sources], domain, spec, perturbation)
    return make


@pytest.fixture
def make_control() -> Callable[..., ControlFunction]:
    def make(domain: SemigroupDomain, source: str, arity: int=2, params: Optional[Dict[str, float]]=None) -> ControlFunction:
        return ControlFunction.from_expression('psi', arity, expression(domain, source, arity, params), domain)
    return make


@pytest.fixture
def write_config(tmp_path: Path) -> Callable[..., Path]:
    def write(data: Dict[str, Any], name: str='scenario.json') -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(data), encoding='utf8')
        return path
    return write
