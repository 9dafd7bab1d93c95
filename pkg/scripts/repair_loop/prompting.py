"""
Prompt assembly from Jinja2 templates, and patch extraction from responses.
"""

import logging
import os
import re
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterable, List, Optional, Sequence

from jinja2 import Environment, FileSystemLoader, StrictUndefined

from ..config import Config
from ..errors import BudgetImpossible, NoPatchFound
from ..input_generation.values import sim_text
from .context import DependencySet, Traceback
from .pairing import Feedback, PairSet

logger = logging.getLogger(__name__)

SYSTEM_TEMPLATE = 'system_prompt.txt'
REPAIR_TEMPLATE = 'repair_prompt.txt'
AUGMENT_TEMPLATE = 'augment_prompt.txt'
BUG_MARKER = '// <BUG HERE>'

_FENCE = re.compile(r'```[^\n]*\n(.*?)```', re.DOTALL)


@dataclass(frozen=True)
class PromptBudget:
    prompt_char_budget: int = 12000

    def __post_init__(self):
        if self.prompt_char_budget < Config.PROMPT['MIN_CHAR_BUDGET']:
            raise ValueError(f"prompt_char_budget must be >= {Config.PROMPT['MIN_CHAR_BUDGET']}, "
                             f'got {self.prompt_char_budget}')

    @classmethod
    def from_config(cls, **overrides):
        settings = dict(prompt_char_budget=Config.PROMPT['CHAR_BUDGET'])
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


@dataclass(frozen=True)
class RepairPrompt:
    system_text: str
    user_text: str

    def __post_init__(self):
        if not self.system_text.strip() or not self.user_text.strip():
            raise ValueError('Both prompt texts must be non-empty')

    @property
    def text(self) -> str:
        """System and user text as one document (the golden-file form, minus the final newline)."""
        return f'{self.system_text}\n\n{self.user_text}'


@lru_cache(maxsize=None)
def _environment(template_dir: str) -> Environment:
    return Environment(loader=FileSystemLoader(template_dir), undefined=StrictUndefined,
                       trim_blocks=True, lstrip_blocks=True, keep_trailing_newline=False,
                       autoescape=False)


def _render(name: str, template_dir: Optional[str] = None, **context) -> str:
    template_dir = template_dir or Config.PATHS['TEMPLATES']
    return _environment(os.path.abspath(template_dir)).get_template(name).render(**context)


def fence_label(lang_label: str) -> str:
    return lang_label.strip().lower()


def system_text(lang_label: str, template_dir: Optional[str] = None) -> str:
    """Role preamble, e.g. 'You are a Python program repair expert.'"""
    article = 'an' if lang_label.strip()[:1].lower() in 'aeiou' else 'a'
    return _render(SYSTEM_TEMPLATE, template_dir, article=article, lang_label=lang_label.strip())


def annotate_fault_lines(source: str, fault_lines: Optional[Iterable[int]]) -> str:
    """Append the bug marker to each marked (1-based) line."""
    marked = set(fault_lines or ())
    if not marked:
        return source
    lines = source.split('\n')
    return '\n'.join(f'{line} {BUG_MARKER}' if number in marked else line
                     for number, line in enumerate(lines, start=1))


def build_repair_prompt(buggy: str, feedback: Feedback, tracebacks: Sequence[Traceback],
                        dependents: DependencySet, fault_lines: Optional[Iterable[int]],
                        lang_label: str, budget: PromptBudget,
                        template_dir: Optional[str] = None) -> RepairPrompt:
    """
    Assemble the repair prompt.

    Sections: buggy function, input pairs (or failing inputs), tracebacks,
    dependent functions, requirement. When the user text overflows the budget,
    dependent functions are dropped from the tail first, then tracebacks.

    Raises:
        BudgetImpossible: the remaining sections alone exceed the budget
    """
    context = dict(lang_label=lang_label.strip(), fence=fence_label(lang_label),
                   buggy=annotate_fault_lines(buggy, fault_lines).rstrip())
    if isinstance(feedback, PairSet):
        context['pairs'] = [(sim_text(p.fail.params), sim_text(p.passing.params)) for p in feedback.pairs]
        context['fails'] = []
    else:
        context['pairs'] = []
        context['fails'] = [sim_text(case.params) for case in feedback.failing_cases]

    kept_tracebacks: List[str] = [tb.raw_text.rstrip() for tb in tracebacks]
    kept_dependents = [(name, source.rstrip()) for name, source in dependents]
    while True:
        user = _render(REPAIR_TEMPLATE, template_dir, tracebacks='\n\n'.join(kept_tracebacks),
                       dependents=kept_dependents, **context)
        if len(user) <= budget.prompt_char_budget:
            break
        if kept_dependents:
            dropped = kept_dependents.pop()
            logger.info(f'Prompt over budget; dropped dependent function {dropped[0]}')
        elif kept_tracebacks:
            kept_tracebacks.pop()
            logger.info('Prompt over budget; dropped a traceback')
        else:
            raise BudgetImpossible(f'Fixed prompt sections need {len(user)} characters, '
                                   f'budget is {budget.prompt_char_budget}')
    return RepairPrompt(system_text(lang_label, template_dir), user)


def build_augment_prompt(buggy: str, plausible: Sequence[str], lang_label: str,
                         template_dir: Optional[str] = None) -> RepairPrompt:
    """Ask for a different plausible fix, showing every fix collected so far."""
    if not plausible:
        raise ValueError('At least one plausible patch is required')
    user = _render(AUGMENT_TEMPLATE, template_dir, lang_label=lang_label.strip(),
                   fence=fence_label(lang_label), buggy=buggy.rstrip(),
                   plausible=[patch.rstrip() for patch in plausible])
    return RepairPrompt(system_text(lang_label, template_dir), user)


def _trim_blank_lines(text: str) -> str:
    lines = text.split('\n')
    while lines and not lines[0].strip():
        lines.pop(0)
    while lines and not lines[-1].strip():
        lines.pop()
    return '\n'.join(lines)


def _balanced_regions(text: str):
    """Yield (start, end) of every brace-balanced region, start at its line start."""
    for open_at, char in enumerate(text):
        if char != '{':
            continue
        depth = 0
        for close_at in range(open_at, len(text)):
            if text[close_at] == '{':
                depth += 1
            elif text[close_at] == '}':
                depth -= 1
                if depth == 0:
                    yield text.rfind('\n', 0, open_at) + 1, close_at + 1
                    break


def extract_patch(response: str, buggy_name: str) -> str:
    """
    Pull the patched function out of a model response.

    The first fenced code block wins; otherwise the largest brace-balanced
    region that mentions `buggy_name`.

    Raises:
        NoPatchFound: neither rule matches, or the result is blank
    """
    match = _FENCE.search(response)
    if match:
        patch = _trim_blank_lines(match.group(1))
    else:
        regions = [response[start:end] for start, end in _balanced_regions(response)
                   if re.search(rf'(?<![A-Za-z0-9_$]){re.escape(buggy_name)}(?![A-Za-z0-9_$])',
                                response[start:end])]
        patch = _trim_blank_lines(max(regions, key=len)) if regions else ''
    if not patch.strip():
        raise NoPatchFound('Response contains no code block or function body')
    return patch
