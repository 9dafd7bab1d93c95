import sys

import pytest

from scripts.bug_spec import FaultGranularity, load_bug_spec, parse_bug_spec
from scripts.errors import SpecInvalid
from scripts.test_harness.models import OracleKind

from conftest import HEXPARSE_DIR


def test_fixture_loads(hexparse_bug):
    assert hexparse_bug.id == 'hexparse'
    assert hexparse_bug.fault_granularity is FaultGranularity.FUNCTION
    assert hexparse_bug.oracle_kind_default is OracleKind.EXCEPTION
    assert hexparse_bug.adapter_command == (sys.executable, 'adapter.py')
    assert hexparse_bug.base_dir == str(HEXPARSE_DIR)
    assert hexparse_bug.marked_lines == frozenset()
    assert set(hexparse_bug.project_index) == {'isAllZeros', 'isBlank'}


def test_line_granularity_needs_fault_lines(hexparse_doc):
    with pytest.raises(SpecInvalid) as excinfo:
        parse_bug_spec(dict(hexparse_doc, faultGranularity='line'))
    assert any('faultLines' in problem for problem in excinfo.value.problems)


def test_fault_line_spans(hexparse_doc):
    bug = parse_bug_spec(dict(hexparse_doc, faultGranularity='hunk', faultLines=[4, [8, 9]]))
    assert bug.marked_lines == frozenset({4, 8, 9})
    with pytest.raises(SpecInvalid):
        parse_bug_spec(dict(hexparse_doc, faultGranularity='line', faultLines=[11]))
    with pytest.raises(SpecInvalid):
        parse_bug_spec(dict(hexparse_doc, faultLines=[4]))


def test_buggy_name_must_occur_as_identifier(hexparse_doc):
    with pytest.raises(SpecInvalid):
        parse_bug_spec(dict(hexparse_doc, buggyName='Number'))


def test_every_problem_is_reported(hexparse_doc):
    document = dict(hexparse_doc, faultGranularity='module', oracleKindDefault='maybe', testIds=['a', 'a'])
    with pytest.raises(SpecInvalid) as excinfo:
        parse_bug_spec(document)
    assert len(excinfo.value.problems) == 3

    with pytest.raises(SpecInvalid) as excinfo:
        parse_bug_spec({'id': 'x'})
    assert 'buggySource: missing' in excinfo.value.problems


def test_bug_dir_placeholder(hexparse_doc, tmp_path):
    bug = parse_bug_spec(dict(hexparse_doc, adapterCommand=['{python}', '{bug_dir}/adapter.py']),
                         base_dir=str(tmp_path))
    assert bug.adapter_command == (sys.executable, f'{tmp_path}/adapter.py')


def test_unreadable_documents(tmp_path):
    with pytest.raises(SpecInvalid):
        load_bug_spec(tmp_path / 'absent.json')
    broken = tmp_path / 'bug.json'
    broken.write_text('{"id": ', encoding='utf-8')
    with pytest.raises(SpecInvalid):
        load_bug_spec(broken)
