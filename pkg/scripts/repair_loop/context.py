"""
Traceback handling and dependent-function extraction.
"""

import re
from dataclasses import dataclass
from typing import Dict, Iterator, List, Sequence, Tuple

from ..test_harness.models import Frame

# at pkg.Class.method(File.java:12)
_AT_FRAME = re.compile(r'at\s+([\w$.<>]+)\(([^:()]+):(\d+)\)')
# File "x.py", line 12, in method
_PY_FRAME = re.compile(r'File "([^"]+)", line (\d+), in ([\w$.<>]+)')
_IDENT_CHAR = r'A-Za-z0-9_$'


def parse_frames(text: str) -> Tuple[Frame, ...]:
    """Recognize stack frames in traceback text, in order of appearance."""
    frames = []
    for line in text.splitlines():
        match = _AT_FRAME.search(line)
        if match:
            frames.append(Frame(match.group(1), match.group(2), int(match.group(3))))
            continue
        match = _PY_FRAME.search(line)
        if match:
            frames.append(Frame(match.group(3), match.group(1), int(match.group(2))))
    return tuple(frames)


@dataclass(frozen=True)
class Traceback:
    raw_text: str
    frames: Tuple[Frame, ...] = ()

    @classmethod
    def from_failure(cls, text: str, frames: Sequence[Frame] = ()):
        """Prefer structured frames from the adapter; parse the text otherwise."""
        return cls(text, tuple(frames) or parse_frames(text))

    @property
    def function_names(self) -> List[str]:
        """Unqualified function name of each frame."""
        return [frame.function.rsplit('.', 1)[-1] for frame in self.frames]


@dataclass(frozen=True)
class DependencySet:
    entries: Tuple[Tuple[str, str], ...] = ()

    def __iter__(self) -> Iterator[Tuple[str, str]]:
        return iter(self.entries)

    def __len__(self):
        return len(self.entries)

    @property
    def names(self) -> List[str]:
        return [name for name, _ in self.entries]

    @property
    def total_chars(self) -> int:
        return sum(len(source) for _, source in self.entries)


def _dedupe_key(text: str) -> str:
    return '\n'.join(line.rstrip() for line in text.splitlines())


def dedupe_tracebacks(tracebacks: Sequence[Traceback]) -> List[Traceback]:
    """Keep the first occurrence of each distinct traceback text."""
    seen = set()
    unique = []
    for tb in tracebacks:
        key = _dedupe_key(tb.raw_text)
        if key not in seen:
            seen.add(key)
            unique.append(tb)
    return unique


def calls(source: str, name: str) -> bool:
    """Whether `name(` occurs in `source` as a whole identifier."""
    pattern = rf'(?<![{_IDENT_CHAR}]){re.escape(name)}\s*\('
    return re.search(pattern, source) is not None


def extract_dependents(buggy_source: str, buggy_name: str, tracebacks: Sequence[Traceback],
                       index: Dict[str, str], char_budget: int) -> DependencySet:
    """
    Collect direct callers and callees of the buggy function named in the tracebacks.

    Admitted functions are expanded breadth-first with the same rule. Only
    functions that appear in a traceback and in the project index qualify.
    Inclusion stops at the first function whose source would overflow
    `char_budget`.

    Args:
        buggy_source: Current source of the buggy function
        buggy_name: Name of the buggy function
        tracebacks: Deduplicated tracebacks
        index: Project functions, name -> source
        char_budget: Maximum total source length of the result

    Returns:
        DependencySet in inclusion order
    """
    if char_budget <= 0:
        raise ValueError(f'char_budget must be positive, got {char_budget}')

    candidates = []
    for tb in tracebacks:
        for name in tb.function_names:
            if name in index and name != buggy_name and name not in candidates:
                candidates.append(name)

    admitted = {buggy_name}
    included = []
    total = 0
    frontier = [(buggy_name, buggy_source)]
    while frontier:
        layer = [name for name in candidates if name not in admitted
                 and any(calls(source, name) or calls(index[name], member)
                         for member, source in frontier)]
        next_frontier = []
        for name in layer:
            source = index[name]
            if total + len(source) > char_budget:
                return DependencySet(tuple(included))
            admitted.add(name)
            included.append((name, source))
            next_frontier.append((name, source))
            total += len(source)
        frontier = next_frontier
    return DependencySet(tuple(included))
