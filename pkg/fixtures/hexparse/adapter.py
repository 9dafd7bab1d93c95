"""
Test adapter for the hexparse fixture.

Reads one JSON request from stdin and writes the response to stdout:
- suite: run one declared test against the patch
- args: call the function on a typed-envelope parameter tuple
- capture: run every test on the original source, streaming one JSON line
  per call of the function

The patch and the project helpers are compiled under one virtual file name so
that only their frames show up in tracebacks.
"""

import inspect
import json
import signal
import sys
import traceback

VIRTUAL_FILE = 'NumberUtils.py'


class TestTimeout(BaseException):
    pass


def _on_alarm(signum, frame):
    raise TestTimeout()


def load(path):
    with open(path, 'r', encoding='utf-8') as f:
        return json.load(f)


# ------------------- Typed envelope -------------------
def decode(node):
    tag, payload = node['t'], node['v']
    if tag == 'arr':
        return [decode(item) for item in payload]
    if tag == 'obj':
        return {name: decode(item) for name, item in payload}
    if tag == 'null':
        return None
    if tag == 'float':
        return float(payload)
    return payload


def encode(value):
    if value is None:
        return {'t': 'null', 'v': None}
    if isinstance(value, bool):
        return {'t': 'bool', 'v': value}
    if isinstance(value, int):
        return {'t': 'int', 'v': value}
    if isinstance(value, float):
        return {'t': 'float', 'v': value}
    if isinstance(value, str):
        return {'t': 'str', 'v': value}
    if isinstance(value, (list, tuple)):
        return {'t': 'arr', 'v': [encode(item) for item in value]}
    if isinstance(value, dict):
        return {'t': 'obj', 'v': [[str(k), encode(v)] for k, v in value.items()]}
    raise TypeError(f'Cannot encode {type(value).__name__}')


# ------------------- Execution -------------------
def build_function(bug, patch):
    namespace = {}
    for source in bug['projectIndex'].values():
        exec(compile(source, VIRTUAL_FILE, 'exec'), namespace)
    exec(compile(patch, VIRTUAL_FILE, 'exec'), namespace)
    if bug['buggyName'] not in namespace:
        raise NameError(f"patch does not define {bug['buggyName']}")
    return namespace[bug['buggyName']]


def failure(exc):
    frames = [fs for fs in traceback.extract_tb(exc.__traceback__) if fs.filename == VIRTUAL_FILE]
    frames.reverse()
    header = traceback.format_exception_only(type(exc), exc)[-1].strip()
    lines = [header] + [f'    at {fs.name}({fs.filename}:{fs.lineno})' for fs in frames]
    return {'verdict': 'fail', 'traceback': '\n'.join(lines),
            'frames': [{'function': fs.name, 'file': fs.filename, 'line': fs.lineno} for fs in frames]}


def guarded(call, timeout_secs):
    """Run call() under the exception oracle with an alarm-based timeout."""
    signal.signal(signal.SIGALRM, _on_alarm)
    signal.alarm(timeout_secs)
    try:
        call()
        return {'verdict': 'pass', 'traceback': None, 'frames': None}
    except TestTimeout:
        return {'verdict': 'timeout', 'traceback': None, 'frames': None}
    except Exception as e:
        return failure(e)
    finally:
        signal.alarm(0)


def check(fn, test):
    result = fn(**test['args'])
    if result != test['expected']:
        raise AssertionError(f"{test['id']}: expected {test['expected']!r} but was {result!r}")


def handle(request, bug, tests):
    mode = request['mode']
    timeout_secs = int(request.get('timeout_secs') or 30)

    if mode == 'suite':
        test = tests.get(request['test_id'])
        if test is None:
            return {'verdict': 'error', 'message': f"unknown test id {request['test_id']!r}"}
        return guarded(lambda: check(build_function(bug, request['patch']), test), timeout_secs)

    if mode == 'args':
        envelope = request['args']
        if envelope.get('t') != 'params':
            return {'verdict': 'error', 'message': 'args must be a parameter tuple'}
        kwargs = {name: decode(node) for name, node in envelope['v']}
        return guarded(lambda: build_function(bug, request['patch'])(**kwargs), timeout_secs)

    return {'verdict': 'error', 'message': f'unknown mode {mode!r}'}


def capture(request, bug, tests):
    fn = build_function(bug, request['patch'])
    signature = inspect.signature(fn)
    records = []

    def recorder(*args, **kwargs):
        bound = signature.bind(*args, **kwargs)
        records.append({'t': 'params', 'v': [[name, encode(value)] for name, value in bound.arguments.items()]})
        return fn(*args, **kwargs)

    timeout_secs = int(request.get('timeout_secs') or 30)
    for test in tests.values():
        records.clear()
        verdict = guarded(lambda: check(recorder, test), timeout_secs)['verdict']
        for invocation in records:
            print(json.dumps({'invocation': invocation, 'test_id': test['id'], 'verdict': verdict}))


def main():
    sys.stdin.reconfigure(encoding='utf-8')
    sys.stdout.reconfigure(encoding='utf-8')
    request = json.loads(sys.stdin.read())
    bug = load('bug.json')
    tests = {test['id']: test for test in load('tests.json')['tests']}
    if request['mode'] == 'capture':
        capture(request, bug, tests)
    else:
        print(json.dumps(handle(request, bug, tests)))


if __name__ == '__main__':
    main()
