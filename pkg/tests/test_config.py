import json

import pytest

from ext.config import DEFAULT, ConfigDict, ConfigManager, KindSchema, validate
from ext.errors import ConfigurationError

KINDS = {
    'exponential.defect': KindSchema(('functions.f', 'functions.g', 'controls.psi')),
    'additive.jensen': KindSchema(('functions.J',)),
    'linear.forward': KindSchema(('functions.f',), {'rho': 1, 'p': 1}),
}


def base(**overrides):
    config = {
        'kind': 'exponential.defect',
        'seed': 1,
        'domain': {'kind': 'naturals-add', 'extent': 64},
        'window': {'start': 0, 'stop': 8},
        'functions': {'f': {'expr': '2^x'}, 'g': '2^x'},
        'controls': {'psi': {'expr': '2^(-x) + 2^(-y)'}},
    }
    config.update(overrides)
    return config


def test_valid_config():
    assert validate(base(), KINDS) == []


def test_missing_seed():
    config = base(seed=None, functions={'f': {'expr': '2^x', 'perturbation': {'envelope': '2^(-x)'}}, 'g': '2^x'})
    assert validate(config, KINDS) == ['functions.f.perturbation: missing seed (declare a scenario or perturbation seed)']
    config['functions']['f']['perturbation']['seed'] = 3
    assert validate(config, KINDS) == []


def test_unknown_identifier():
    config = base(functions={'f': {'expr': 'x + z'}, 'g': '2^x'})
    assert validate(config, KINDS) == ["functions.f.expr: unknown identifier 'z' at offset 4"]


def test_params_are_identifiers():
    config = base(params={'z': 0.5}, functions={'f': {'expr': 'x + z'}, 'g': '2^x'})
    assert validate(config, KINDS) == []


def test_y_only_in_two_argument_controls():
    config = base(controls={'psi': {'expr': 'abs(y)', 'arity': 1}})
    assert validate(config, KINDS) == ["controls.psi.expr: unknown identifier 'y' at offset 4"]


def test_unknown_kind_and_verdict():
    problems = validate(base(kind='exponential.nope', expect='stable-ish'), KINDS)
    assert "kind: unknown scenario kind 'exponential.nope'" in problems
    assert "expect: unknown verdict 'stable-ish'" in problems


def test_required_entries():
    problems = validate(base(kind='additive.jensen'), KINDS)
    assert problems == ['functions.J: required by additive.jensen']


def test_problems_are_all_reported():
    config = base(
        seed=-1,
        domain={'kind': 'integers-mod-m'},
        functions={'f': {'expr': '2^'}},
        tolerances={'tol': 0, 'speed': 1},
    )
    problems = validate(config, KINDS)
    assert any(p.startswith('seed:') for p in problems)
    assert any(p.startswith('domain:') for p in problems)
    assert any(p.startswith('functions.f.expr: syntax error at offset 2') for p in problems)
    assert 'tolerances.tol: must be a positive number, got 0' in problems
    assert 'tolerances.speed: unknown tolerance' in problems


def test_defaults():
    config = ConfigDict(base())
    assert config.tolerances.tol == DEFAULT['tolerances']['tol']
    assert config.window.pairs == 'exhaustive'
    assert config.domain.step == 1
    assert config.report.csv
    assert config.options.get('rho') is None


def test_manager_reads_and_overrides_seed(tmp_path):
    path = tmp_path / 'scenario.json'
    path.write_text(json.dumps(base()), encoding='utf8')
    manager = ConfigManager(KINDS)
    assert manager.get_config(path).seed == 1
    assert manager.get_config(path, seed=9).seed == 9
    assert manager.get_config(path).seed == 1


def test_manager_reports_bad_files(tmp_path):
    manager = ConfigManager(KINDS)
    with pytest.raises(ConfigurationError):
        manager.read(tmp_path / 'missing.json')
    path = tmp_path / 'broken.json'
    path.write_text('{"kind": ', encoding='utf8')
    with pytest.raises(ConfigurationError) as e:
        manager.read(path)
    assert 'is not valid JSON' in e.value.problems[0]
    path.write_text('[]', encoding='utf8')
    with pytest.raises(ConfigurationError):
        ConfigManager(KINDS).read(path)


def test_expression_options_follow_the_kind():
    config = base(kind='linear.forward', options={'rho': 'x + z', 'p': 2})
    assert validate(config, KINDS) == ["options.rho: unknown identifier 'z' at offset 4"]
    config = base(options={'rho': 'rho1', 'p': 1})
    assert validate(config, KINDS) == []
