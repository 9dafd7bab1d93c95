"""
Shared types describing test cases and their execution verdicts.
"""

from dataclasses import dataclass, field
from enum import Enum
from typing import List, Optional, Tuple

from ..input_generation.values import ParamTuple, encode_typed


class Provenance(str, Enum):
    RECORDED = 'recorded'
    MUTATED = 'mutated'


class OracleKind(str, Enum):
    EXCEPTION = 'exception'
    ASSERTION = 'assertion'


@dataclass(frozen=True)
class TestCase:
    """A named parameter tuple for the buggy function."""
    __test__ = False

    id: str
    params: ParamTuple
    provenance: Provenance = Provenance.RECORDED
    oracle_kind: OracleKind = OracleKind.ASSERTION

    @property
    def key(self) -> str:
        """Identity of the inputs (lossless encoding of the parameters)."""
        return encode_typed(self.params)

    @property
    def test_id(self) -> str:
        """Declared unit-test id this case was recorded from."""
        return self.id.split('#', 1)[0]


class VerdictKind(str, Enum):
    PASS = 'pass'
    FAIL = 'fail'
    TIMEOUT = 'timeout'
    ERROR = 'error'


@dataclass(frozen=True)
class Frame:
    function: str
    file: str
    line: int


@dataclass(frozen=True)
class Verdict:
    kind: VerdictKind
    traceback: Optional[str] = None
    message: Optional[str] = None
    frames: Tuple[Frame, ...] = ()

    def __post_init__(self):
        if self.kind is VerdictKind.FAIL and not (self.traceback or '').strip():
            raise ValueError('A Fail verdict must carry a traceback')
        object.__setattr__(self, 'frames', tuple(self.frames))

    @classmethod
    def passed(cls):
        return cls(VerdictKind.PASS)

    @classmethod
    def failed(cls, traceback, frames=()):
        return cls(VerdictKind.FAIL, traceback=traceback, frames=tuple(frames))

    @classmethod
    def timed_out(cls, seconds):
        return cls(VerdictKind.TIMEOUT, message=f'timed out after {seconds}s')

    @classmethod
    def harness_error(cls, message):
        return cls(VerdictKind.ERROR, message=message)

    @property
    def is_pass(self) -> bool:
        return self.kind is VerdictKind.PASS

    def failure_text(self) -> str:
        """Traceback of a failure; a synthetic one for timeouts and harness errors."""
        if self.kind is VerdictKind.FAIL:
            return self.traceback
        if self.kind is VerdictKind.TIMEOUT:
            return f'TIMEOUT: test {self.message}'
        if self.kind is VerdictKind.ERROR:
            return f'HARNESS ERROR: {self.message}'
        return ''


@dataclass(frozen=True)
class FailedTest:
    case: TestCase
    traceback: str
    frames: Tuple[Frame, ...] = ()


@dataclass
class SuiteResult:
    passing: List[TestCase] = field(default_factory=list)
    failing: List[FailedTest] = field(default_factory=list)

    @property
    def failing_cases(self) -> List[TestCase]:
        return [failed.case for failed in self.failing]

    @property
    def all_pass(self) -> bool:
        return not self.failing
