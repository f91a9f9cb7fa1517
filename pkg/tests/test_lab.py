import json

import pytest

from cogs.gallery import Gallery
from conftest import SCENARIOS
from ext.config import ConfigDict
from ext.errors import ConfigurationError
from ext.report import RunReport, Verdict
from ext.scenario import ScenarioContext
from lab import main

DEFECT = {
    'kind': 'additive.defect',
    'expect': 'defect-measured',
    'domain': {'kind': 'naturals-add', 'extent': 64},
    'window': {'start': 0, 'stop': 4},
    'functions': {'f': '3*x'},
}


def test_every_kind_is_listed(lab):
    listed = lab.list_scenarios()
    assert len(listed) == len(lab.scenarios) >= 15
    assert listed == sorted(listed)
    assert {kind.split('.')[0] for kind in lab.scenarios} == {'additive', 'exponential', 'gallery', 'linear'}


def test_catalog_lines_name_their_anchor(lab):
    listed = lab.list_scenarios()
    assert any(line.startswith('linear.forward ') and line.endswith('(forward linear stabilization)') for line in listed)
    assert any(line.startswith('additive.hyperstability ') and line.endswith('(hyperstability of the additive equation)') for line in listed)
    assert all(line.endswith(')') for line in listed)


def test_every_kind_has_a_scenario(lab):
    kinds = {json.loads(path.read_text(encoding='utf8'))['kind'] for path in SCENARIOS.glob('*.json')}
    assert kinds == set(lab.scenarios)


def test_cogs_register_once(lab):
    with pytest.raises(ValueError):
        lab.add_cog(Gallery(lab))


@pytest.mark.parametrize('expect,verdict,status', [
    (None, Verdict.DEFECT, 0),
    (None, Verdict.ENGINE_FAILURE, 1),
    ('defect-measured', Verdict.DEFECT, 0),
    ('defect-measured', Verdict.VIOLATION, 1),
    ('defect-measured', Verdict.CONFIG_ERROR, 2),
    ('engine-failure', Verdict.ENGINE_FAILURE, 0),
])
def test_status(lab, expect, verdict, status):
    report = RunReport({'expect': expect}, 'additive.defect', verdict)
    assert lab.status(report) == status


def test_run_writes_the_report(lab, write_config, tmp_path):
    path = write_config(DEFECT)
    assert lab.run(str(path), tmp_path / 'out') == 0
    report = json.loads((tmp_path / 'out' / 'scenario' / 'report.json').read_text(encoding='utf8'))
    assert report['verdict'] == 'defect-measured'
    assert report['details']['defect']['sup'] == 0
    metadata = json.loads((tmp_path / 'out' / 'scenario' / 'metadata.json').read_text(encoding='utf8'))
    assert set(metadata) == {'duration', 'started', 'version'}


def test_expect_mismatch(lab, write_config, tmp_path):
    path = write_config({**DEFECT, 'expect': 'hur-stable'})
    assert lab.run(str(path), tmp_path) == 1


def test_invalid_config_is_not_run(lab, write_config, tmp_path):
    path = write_config({**DEFECT, 'kind': 'additive.nothing'})
    assert lab.run(str(path), tmp_path / 'out') == 2
    assert not (tmp_path / 'out').exists()
    assert lab.validate(str(path)) == ["kind: unknown scenario kind 'additive.nothing'"]


def test_errors_become_verdicts(lab):
    ctx = ScenarioContext(ConfigDict(DEFECT))
    lab.on_scenario_error(ctx, ConfigurationError(['params.eps: required by additive.defect']))
    assert ctx.report.verdict == Verdict.CONFIG_ERROR
    assert lab.status(ctx.report) == 2

    ctx = ScenarioContext(ConfigDict(DEFECT))
    lab.on_scenario_error(ctx, RuntimeError('boom'))
    assert ctx.report.verdict == Verdict.ENGINE_FAILURE
    assert ctx.report.witness == {'exception': 'RuntimeError', 'message': 'boom'}


def test_missing_requirement_is_a_config_error(lab):
    report = lab.run_config(ConfigDict({**DEFECT, 'kind': 'gallery.bound-formulas'}))
    assert report.verdict == Verdict.CONFIG_ERROR
    assert report.witness == 'params.eps: required by gallery.bound-formulas'


@pytest.mark.parametrize('fmt,names', [
    ('csv', {'report.json', 'metadata.json', 'bound_profile.csv', 'trace_T.csv', 'conditions_lipschitz.csv'}),
    ('json', {'report.json', 'metadata.json'}),
])
def test_output_format(lab, tmp_path, fmt, names):
    assert lab.run(str(SCENARIOS / 'linear-forward-gamma.json'), tmp_path, fmt=fmt) == 0
    assert {p.name for p in (tmp_path / 'linear-forward-gamma').iterdir()} == names


def test_main_validate(write_config, capsys):
    good, bad = write_config(DEFECT, 'good.json'), write_config({**DEFECT, 'seed': -1}, 'bad.json')
    assert main(['validate', str(good)]) == 0
    assert main(['validate', str(good), str(bad)]) == 2
    out = capsys.readouterr().out
    assert f'{good}: ok' in out
    assert f'{bad}: seed: must be a nonnegative integer, got -1' in out


def test_main_scenarios(lab, capsys):
    assert main(['scenarios']) == 0
    lines = [line for line in capsys.readouterr().out.splitlines() if ' — ' in line]
    assert lines == lab.list_scenarios()


def test_main_run(write_config, tmp_path):
    path = write_config(DEFECT)
    assert main(['run', str(path), '--out', str(tmp_path / 'out'), '--format', 'json']) == 0
    assert (tmp_path / 'out' / 'scenario' / 'report.json').exists()


def test_forward_solve_without_reach_exhausts_the_window(lab, write_config):
    data = json.loads((SCENARIOS / 'linear-forward-gamma.json').read_text(encoding='utf8'))
    del data['window']['reach']
    report = lab.run_config(lab.config.get_config(write_config(data)))
    assert report.verdict == Verdict.ENGINE_FAILURE
    assert report.witness == {'element': '13', 'depth': 0}


def test_missing_witness_is_an_engine_failure(lab):
    report = RunReport({}, 'additive.defect', Verdict.VIOLATION)
    lab.check_witness(report)
    assert report.verdict == Verdict.ENGINE_FAILURE
    assert report.witness == {'check': 'witness present', 'verdict': Verdict.VIOLATION}

    found = RunReport({}, 'additive.defect', Verdict.VIOLATION, witness={'pair': (1, 2)})
    lab.check_witness(found)
    assert found.verdict == Verdict.VIOLATION

    measured = RunReport({}, 'additive.defect', Verdict.DEFECT)
    lab.check_witness(measured)
    assert measured.verdict == Verdict.DEFECT and measured.witness is None
