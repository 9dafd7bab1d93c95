"""
Adapter protocol for executing the target's tests.

Every call spawns the bug's adapter command, writes one JSON request to its
stdin and reads the JSON response from stdout. Capture mode streams one JSON
line per invocation of the buggy function instead.

Request:  {"mode", "patch", "test_id", "args", "timeout_secs"}
Response: {"verdict", "traceback", "frames"}
"""

import json
import logging
import subprocess
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

from ..config import Config
from ..errors import (AdapterUnavailable, MalformedEnvelope, OracleUnsupported,
                      ProtocolError)
from ..input_generation.values import ParamTuple, from_envelope, to_envelope
from .models import (FailedTest, Frame, OracleKind, Provenance, SuiteResult,
                     TestCase, Verdict, VerdictKind)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class HarnessConfig:
    timeout_secs: int = 30
    grace_secs: int = 2
    workers: int = 4

    def __post_init__(self):
        if self.timeout_secs < 1:
            raise ValueError(f'timeout_secs must be >= 1, got {self.timeout_secs}')
        if self.grace_secs < 0:
            raise ValueError(f'grace_secs must be >= 0, got {self.grace_secs}')
        if self.workers < 1:
            raise ValueError(f'workers must be >= 1, got {self.workers}')

    @classmethod
    def from_config(cls, **overrides):
        settings = dict(timeout_secs=Config.HARNESS['TIMEOUT_SECS'],
                        grace_secs=Config.HARNESS['GRACE_SECS'],
                        workers=Config.HARNESS['WORKERS'])
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


# ------------------- Process plumbing -------------------
def _invoke(bug, request: dict, cfg: HarnessConfig, wall_secs: Optional[float] = None) -> Optional[str]:
    """
    Run the adapter once.

    Returns:
        The adapter's stdout, or None when the process exceeded its wall time
    """
    wall_secs = wall_secs if wall_secs is not None else cfg.timeout_secs + cfg.grace_secs
    try:
        result = subprocess.run(list(bug.adapter_command), input=json.dumps(request, ensure_ascii=False),
                                capture_output=True, text=True, encoding='utf-8',
                                cwd=bug.base_dir, timeout=wall_secs)
    except subprocess.TimeoutExpired:
        logger.warning(f"Adapter for {bug.id} killed after {wall_secs}s (mode {request['mode']})")
        return None
    except OSError as e:
        raise AdapterUnavailable(f'Cannot start adapter {bug.adapter_command[0]!r}: {e}') from e

    if result.stderr:
        logger.debug(f'Adapter stderr ({bug.id}): {result.stderr.strip()}')
    if result.returncode != 0:
        tail = result.stderr.strip().splitlines()[-1:] or ['<no stderr>']
        raise ProtocolError(f'Adapter exited with code {result.returncode}: {tail[0]}')
    return result.stdout


def _parse_frames(raw) -> Tuple[Frame, ...]:
    if raw is None:
        return ()
    try:
        return tuple(Frame(str(f['function']), str(f['file']), int(f['line'])) for f in raw)
    except (KeyError, TypeError, ValueError) as e:
        raise ProtocolError(f'Malformed frames in adapter response: {raw!r}') from e


def _parse_verdict(stdout: str, cfg: HarnessConfig) -> Verdict:
    try:
        payload = json.loads(stdout)
    except json.JSONDecodeError as e:
        raise ProtocolError(f'Adapter response is not JSON: {stdout[:200]!r}') from e
    if not isinstance(payload, dict):
        raise ProtocolError(f'Adapter response must be an object, got {payload!r}')
    try:
        kind = VerdictKind(payload.get('verdict'))
    except ValueError as e:
        raise ProtocolError(f"Unknown verdict {payload.get('verdict')!r}") from e

    traceback = payload.get('traceback')
    frames = _parse_frames(payload.get('frames'))
    if kind is VerdictKind.PASS:
        return Verdict.passed()
    if kind is VerdictKind.FAIL:
        if not isinstance(traceback, str) or not traceback.strip():
            raise ProtocolError('Fail verdict without a traceback')
        return Verdict.failed(traceback, frames)
    if kind is VerdictKind.TIMEOUT:
        return Verdict.timed_out(cfg.timeout_secs)
    return Verdict.harness_error(payload.get('message') or traceback or 'adapter reported an error')


def _request(mode, patch, test_id=None, args=None, cfg=None):
    return {'mode': mode, 'patch': patch, 'test_id': test_id,
            'args': None if args is None else to_envelope(args),
            'timeout_secs': cfg.timeout_secs}


def _require_patch(patch):
    if not isinstance(patch, str) or not patch.strip():
        raise ValueError('Patch source must be non-empty text')


# ------------------- Operations -------------------
def run_declared_test(patch: str, test_id: str, bug, cfg: Optional[HarnessConfig] = None) -> Verdict:
    """Run one declared unit test (suite mode) against `patch`."""
    cfg = cfg or HarnessConfig.from_config()
    _require_patch(patch)
    stdout = _invoke(bug, _request('suite', patch, test_id=test_id, cfg=cfg), cfg)
    if stdout is None:
        return Verdict.timed_out(cfg.timeout_secs)
    return _parse_verdict(stdout, cfg)


def run_suite(patch: str, bug, cfg: Optional[HarnessConfig] = None,
              recorded: Optional[Sequence[TestCase]] = None) -> SuiteResult:
    """
    Run every declared unit test against `patch`.

    Timeouts and harness errors count as failures with a synthetic traceback.

    Args:
        patch: Full source of the candidate buggy function
        bug: BugSpec
        cfg: Harness configuration
        recorded: Captured test cases; supplies the parameters of each test id

    Returns:
        SuiteResult with one entry per declared test id
    """
    cfg = cfg or HarnessConfig.from_config()
    by_id: Dict[str, TestCase] = {}
    for case in recorded or ():
        by_id.setdefault(case.test_id, case)

    result = SuiteResult()
    for test_id in bug.test_ids:
        verdict = run_declared_test(patch, test_id, bug, cfg)
        case = by_id.get(test_id) or TestCase(id=test_id, params=ParamTuple(),
                                              oracle_kind=bug.oracle_kind_default)
        if verdict.is_pass:
            result.passing.append(case)
        else:
            result.failing.append(FailedTest(case, verdict.failure_text(), verdict.frames))
    logger.info(f'Suite for {bug.id}: {len(result.passing)} passing, {len(result.failing)} failing')
    return result


def run_with_args(patch: str, args: ParamTuple, oracle_kind: OracleKind, bug,
                  cfg: Optional[HarnessConfig] = None) -> Verdict:
    """
    Execute the buggy function directly on `args` under the exception oracle.

    Raises:
        OracleUnsupported: for the assertion oracle (mutants carry no assertions)
    """
    if OracleKind(oracle_kind) is not OracleKind.EXCEPTION:
        raise OracleUnsupported('Only the exception oracle can judge directly executed inputs')
    cfg = cfg or HarnessConfig.from_config()
    _require_patch(patch)
    stdout = _invoke(bug, _request('args', patch, args=args, cfg=cfg), cfg)
    if stdout is None:
        return Verdict.timed_out(cfg.timeout_secs)
    return _parse_verdict(stdout, cfg)


def run_test(patch: str, case: TestCase, bug, cfg: Optional[HarnessConfig] = None) -> Verdict:
    """Run a recorded test by its id, or a mutated one by its arguments."""
    if case.provenance is Provenance.RECORDED:
        return run_declared_test(patch, case.test_id, bug, cfg)
    return run_with_args(patch, case.params, case.oracle_kind, bug, cfg)


def capture_args(bug, cfg: Optional[HarnessConfig] = None) -> List[TestCase]:
    """
    Record the parameters of every buggy-function invocation made by the unit tests.

    The first distinct invocation of a test keeps the test's id; further ones
    are suffixed `#2`, `#3`, ... Duplicates (by encoding) are dropped.
    """
    cfg = cfg or HarnessConfig.from_config()
    wall = cfg.timeout_secs * max(1, len(bug.test_ids)) + cfg.grace_secs
    stdout = _invoke(bug, _request('capture', bug.buggy_source, cfg=cfg), cfg, wall_secs=wall)
    if stdout is None:
        raise ProtocolError(f'Capture run for {bug.id} exceeded {wall}s')

    seen = set()
    per_test: Dict[str, int] = {}
    cases = []
    for number, line in enumerate(stdout.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
            params = from_envelope(record['invocation'])
            test_id = str(record['test_id'])
        except (json.JSONDecodeError, KeyError, TypeError, MalformedEnvelope) as e:
            raise ProtocolError(f'Bad capture record on line {number}: {line[:200]!r}') from e
        if not isinstance(params, ParamTuple):
            raise ProtocolError(f'Capture record on line {number} is not a parameter tuple')
        case = TestCase(id=test_id, params=params, provenance=Provenance.RECORDED,
                        oracle_kind=bug.oracle_kind_default)
        if case.key in seen:
            continue
        seen.add(case.key)
        per_test[test_id] = per_test.get(test_id, 0) + 1
        if per_test[test_id] > 1:
            case = TestCase(id=f'{test_id}#{per_test[test_id]}', params=params,
                            provenance=Provenance.RECORDED, oracle_kind=bug.oracle_kind_default)
        cases.append(case)
    logger.info(f'Captured {len(cases)} distinct invocations for {bug.id}')
    return cases


def validate_candidates(cases: Sequence[TestCase], patch: str, bug,
                        cfg: Optional[HarnessConfig] = None,
                        deadline: Optional[float] = None) -> List[Tuple[TestCase, Verdict]]:
    """
    Run mutated candidates against `patch` on a worker pool.

    Args:
        cases: Candidates to validate (exception oracle)
        patch: Source to validate against
        bug: BugSpec
        cfg: Harness configuration (worker-pool width)
        deadline: time.monotonic() value after which no new batch starts

    Returns:
        (case, verdict) pairs in submission order, for every case validated
    """
    cfg = cfg or HarnessConfig.from_config()
    results = []
    with ThreadPoolExecutor(max_workers=cfg.workers) as executor:
        for start in range(0, len(cases), cfg.workers):
            if deadline is not None and time.monotonic() >= deadline:
                logger.info(f'Validation budget exhausted after {len(results)} of {len(cases)} candidates')
                break
            batch = cases[start:start + cfg.workers]
            futures = [executor.submit(run_with_args, patch, case.params, case.oracle_kind, bug, cfg)
                       for case in batch]
            results.extend(zip(batch, (future.result() for future in futures)))
    return results
