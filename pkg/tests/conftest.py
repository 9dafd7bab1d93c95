import json
import sys
import textwrap
from pathlib import Path

import pytest

from scripts.bug_spec import load_bug_spec, parse_bug_spec
from scripts.config import Config
from scripts.input_generation.values import params_of
from scripts.test_harness.adapter import HarnessConfig
from scripts.test_harness.models import OracleKind, Provenance, TestCase

ROOT = Path(__file__).resolve().parent.parent
HEXPARSE_DIR = ROOT / 'fixtures' / 'hexparse'
GOLDEN_DIR = ROOT / 'golden'

HEX_TRACEBACK = ("ValueError: could not convert string to float: '-0Xfade'\n"
                 "    at isAllZeros(NumberUtils.py:4)\n"
                 "    at createNumber(NumberUtils.py:8)")


@pytest.fixture(autouse=True)
def isolated_config(tmp_path, monkeypatch):
    """Keep Config changes and log files local to each test."""
    snapshot = Config.snapshot()
    monkeypatch.setitem(Config.PATHS, 'LOGS', str(tmp_path / 'logs'))
    monkeypatch.setitem(Config.PATHS, 'RESULTS', str(tmp_path / 'results'))
    yield
    Config.restore(snapshot)


@pytest.fixture()
def hexparse_bug():
    return load_bug_spec(HEXPARSE_DIR / 'bug.json')


@pytest.fixture()
def hexparse_doc():
    with open(HEXPARSE_DIR / 'bug.json', 'r', encoding='utf-8') as f:
        return json.load(f)


@pytest.fixture()
def fixed_source():
    return (HEXPARSE_DIR / 'fixed.py').read_text(encoding='utf-8')


@pytest.fixture()
def harness_cfg():
    return HarnessConfig(timeout_secs=10, grace_secs=2, workers=4)


def case(case_id, provenance=Provenance.RECORDED, oracle_kind=OracleKind.EXCEPTION, **params):
    return TestCase(id=case_id, params=params_of(**params), provenance=provenance, oracle_kind=oracle_kind)


def hex_cases():
    """(failing, passing-negative, passing-lower) cases of the hexparse fixture."""
    return (case('t_fail_upperhex', str='-0Xfade'),
            case('t_pass_neghex', str='-0xfade'),
            case('t_pass_lowerhex', str='0xfade'))


def script_bug(tmp_path, script, test_ids=('t1',), oracle='exception', name='f'):
    """Bug spec whose adapter is an inline Python script."""
    document = {'id': 'inline', 'langLabel': 'Python', 'buggyName': name,
                'buggySource': f'def {name}(x):\n    return x\n', 'faultGranularity': 'function',
                'adapterCommand': [sys.executable, '-c', textwrap.dedent(script)],
                'testIds': list(test_ids), 'oracleKindDefault': oracle}
    return parse_bug_spec(document, base_dir=str(tmp_path))
