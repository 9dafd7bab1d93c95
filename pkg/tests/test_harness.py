import time
from dataclasses import replace

import pytest

from scripts.errors import AdapterUnavailable, OracleUnsupported, ProtocolError
from scripts.input_generation.values import params_of
from scripts.test_harness.adapter import (HarnessConfig, capture_args,
                                          run_suite, run_test, run_with_args,
                                          validate_candidates)
from scripts.test_harness.models import (OracleKind, Provenance, VerdictKind)

from conftest import case, hex_cases, script_bug

SIGN_ADAPTER = """
    import json, sys
    request = json.loads(sys.stdin.read())
    x = request['args']['v'][0][1]['v']
    if x < 0:
        print(json.dumps({'verdict': 'fail', 'traceback': 'ValueError: negative\\n    at f(f.py:2)',
                          'frames': [{'function': 'f', 'file': 'f.py', 'line': 2}]}))
    else:
        print(json.dumps({'verdict': 'pass', 'traceback': None, 'frames': None}))
"""

CAPTURE_ADAPTER = """
    import json, sys
    sys.stdin.read()
    for test_id, value in (('t1', 1), ('t1', 1), ('t1', 2), ('t2', 3), ('t2', 1)):
        invocation = {'t': 'params', 'v': [['x', {'t': 'int', 'v': value}]]}
        print(json.dumps({'invocation': invocation, 'test_id': test_id, 'verdict': 'pass'}))
"""


@pytest.fixture()
def fast_cfg():
    return HarnessConfig(timeout_secs=1, grace_secs=0, workers=2)


# ------------------- protocol -------------------
def test_args_mode_verdicts(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, SIGN_ADAPTER)
    assert run_with_args('def f(x): pass', params_of(x=3), OracleKind.EXCEPTION, bug, harness_cfg).is_pass
    verdict = run_with_args('def f(x): pass', params_of(x=-3), OracleKind.EXCEPTION, bug, harness_cfg)
    assert verdict.kind is VerdictKind.FAIL
    assert verdict.traceback.startswith('ValueError: negative')
    assert [frame.function for frame in verdict.frames] == ['f']


def test_assertion_oracle_cannot_run_direct_args(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, SIGN_ADAPTER, oracle='assertion')
    with pytest.raises(OracleUnsupported):
        run_with_args('def f(x): pass', params_of(x=1), OracleKind.ASSERTION, bug, harness_cfg)


def test_non_json_output_is_a_protocol_error(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, "import sys; sys.stdin.read(); print('hello')")
    with pytest.raises(ProtocolError):
        run_with_args('def f(x): pass', params_of(x=1), OracleKind.EXCEPTION, bug, harness_cfg)


def test_fail_without_traceback_is_a_protocol_error(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, "import sys; sys.stdin.read(); print('{\"verdict\": \"fail\"}')")
    with pytest.raises(ProtocolError):
        run_with_args('def f(x): pass', params_of(x=1), OracleKind.EXCEPTION, bug, harness_cfg)


def test_nonzero_exit_is_a_protocol_error(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, "import sys; sys.stdin.read(); sys.exit(3)")
    with pytest.raises(ProtocolError):
        run_with_args('def f(x): pass', params_of(x=1), OracleKind.EXCEPTION, bug, harness_cfg)


def test_missing_adapter_binary(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, '')
    bug = replace(bug, adapter_command=('/nonexistent/adapter-binary',))
    with pytest.raises(AdapterUnavailable):
        run_with_args('def f(x): pass', params_of(x=1), OracleKind.EXCEPTION, bug, harness_cfg)


def test_hanging_adapter_times_out(tmp_path, fast_cfg):
    bug = script_bug(tmp_path, "import time; time.sleep(10)")
    verdict = run_with_args('def f(x): pass', params_of(x=1), OracleKind.EXCEPTION, bug, fast_cfg)
    assert verdict.kind is VerdictKind.TIMEOUT

    result = run_suite('def f(x): pass', bug, fast_cfg)
    assert [failed.traceback for failed in result.failing] == ['TIMEOUT: test timed out after 1s']


def test_capture_dedupes_and_numbers_invocations(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, CAPTURE_ADAPTER, test_ids=('t1', 't2'))
    cases = capture_args(bug, harness_cfg)
    assert [c.id for c in cases] == ['t1', 't1#2', 't2']
    assert [c.params for c in cases] == [params_of(x=1), params_of(x=2), params_of(x=3)]
    assert all(c.provenance is Provenance.RECORDED for c in cases)
    assert all(c.oracle_kind is OracleKind.EXCEPTION for c in cases)


def test_capture_with_no_invocations(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, "import sys; sys.stdin.read()", test_ids=())
    assert capture_args(bug, harness_cfg) == []


def test_validation_keeps_order(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, SIGN_ADAPTER)
    cases = [case(f'c{i}', Provenance.MUTATED, x=value) for i, value in enumerate((1, -1, 2, -2, 3))]
    results = validate_candidates(cases, 'def f(x): pass', bug, harness_cfg)
    assert [c.id for c, _ in results] == ['c0', 'c1', 'c2', 'c3', 'c4']
    assert [v.is_pass for _, v in results] == [True, False, True, False, True]


def test_validation_stops_at_deadline(tmp_path, harness_cfg):
    bug = script_bug(tmp_path, SIGN_ADAPTER)
    cases = [case('c0', Provenance.MUTATED, x=1)]
    assert validate_candidates(cases, 'def f(x): pass', bug, harness_cfg, deadline=time.monotonic() - 1) == []


# ------------------- hexparse fixture -------------------
def test_hexparse_suite(hexparse_bug, fixed_source, harness_cfg):
    result = run_suite(hexparse_bug.buggy_source, hexparse_bug, harness_cfg)
    assert [c.id for c in result.failing_cases] == ['t_fail_upperhex']
    assert sorted(c.id for c in result.passing) == ['t_pass_lowerhex', 't_pass_neghex']
    failed = result.failing[0]
    assert 'at isAllZeros(NumberUtils.py:4)' in failed.traceback
    assert [frame.function for frame in failed.frames] == ['isAllZeros', 'createNumber']

    assert run_suite(fixed_source, hexparse_bug, harness_cfg).all_pass


def test_hexparse_suite_is_repeatable(hexparse_bug, harness_cfg):
    first = run_suite(hexparse_bug.buggy_source, hexparse_bug, harness_cfg)
    second = run_suite(hexparse_bug.buggy_source, hexparse_bug, harness_cfg)
    assert first == second


def test_hexparse_direct_execution(hexparse_bug, harness_cfg):
    source = hexparse_bug.buggy_source
    assert run_with_args(source, params_of(str='-0xfade'), OracleKind.EXCEPTION, hexparse_bug, harness_cfg).is_pass
    verdict = run_with_args(source, params_of(str='-0Xfade'), OracleKind.EXCEPTION, hexparse_bug, harness_cfg)
    assert verdict.kind is VerdictKind.FAIL
    assert 'createNumber' in verdict.traceback


def test_hexparse_capture(hexparse_bug, harness_cfg):
    cases = capture_args(hexparse_bug, harness_cfg)
    assert {c.id: c.params for c in cases} == {c.id: c.params for c in hex_cases()}


def test_run_test_dispatches_on_provenance(hexparse_bug, harness_cfg):
    fail, _, _ = hex_cases()
    mutant = case('t_fail_upperhex~m1', Provenance.MUTATED, str='0Xfade')
    assert run_test(hexparse_bug.buggy_source, fail, hexparse_bug, harness_cfg).kind is VerdictKind.FAIL
    assert run_test(hexparse_bug.buggy_source, mutant, hexparse_bug, harness_cfg).is_pass
