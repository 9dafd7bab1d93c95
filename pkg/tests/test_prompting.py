import pytest

from scripts.errors import BudgetImpossible, NoPatchFound
from scripts.repair_loop.context import DependencySet, Traceback
from scripts.repair_loop.pairing import (FailOnly, PairConfig, build_pool,
                                         select_pairs)
from scripts.repair_loop.prompting import (BUG_MARKER, PromptBudget,
                                           annotate_fault_lines,
                                           build_augment_prompt,
                                           build_repair_prompt, extract_patch,
                                           system_text)

from conftest import GOLDEN_DIR, HEX_TRACEBACK, hex_cases

PAD_HELPER = 'def padHelper(str):\n' + '    total = 0\n' * 100


def golden(name):
    return (GOLDEN_DIR / name).read_text(encoding='utf-8')


def hex_pairs(k):
    fail, neg, lower = hex_cases()
    pool = build_pool([fail], [neg, lower], PairConfig(theta=0.5, k=k))
    return select_pairs(pool, k)


@pytest.fixture()
def is_all_zeros(hexparse_bug):
    return ('isAllZeros', hexparse_bug.project_index['isAllZeros'])


def test_first_round_prompt(hexparse_bug, is_all_zeros):
    prompt = build_repair_prompt(hexparse_bug.buggy_source, hex_pairs(2), [Traceback.from_failure(HEX_TRACEBACK)],
                                 DependencySet((is_all_zeros,)), None, 'Python', PromptBudget())
    assert prompt.text + '\n' == golden('hexparse_round1.txt')


def test_fail_only_prompt(hexparse_bug):
    fail, _, _ = hex_cases()
    prompt = build_repair_prompt(hexparse_bug.buggy_source, FailOnly((fail,)), [Traceback.from_failure(HEX_TRACEBACK)],
                                 DependencySet(), None, 'Python', PromptBudget())
    assert prompt.text + '\n' == golden('failonly.txt')
    assert 'Passing input' not in prompt.text


def test_truncation_drops_dependents_from_the_tail(hexparse_bug, is_all_zeros):
    budget = PromptBudget(2000)
    prompt = build_repair_prompt(hexparse_bug.buggy_source, hex_pairs(1), [Traceback.from_failure(HEX_TRACEBACK)],
                                 DependencySet((is_all_zeros, ('padHelper', PAD_HELPER))), None, 'Python', budget)
    assert len(prompt.user_text) <= budget.prompt_char_budget
    assert 'padHelper' not in prompt.text
    assert prompt.text + '\n' == golden('truncation.txt')


def test_tracebacks_are_dropped_once_dependents_are_gone(hexparse_bug):
    long_trace = Traceback.from_failure('Error: ' + 'x' * 1500)
    prompt = build_repair_prompt(hexparse_bug.buggy_source, hex_pairs(1), [long_trace],
                                 DependencySet(), None, 'Python', PromptBudget(2000))
    assert 'x' * 1500 not in prompt.user_text
    assert 'Failing input: {str:-0Xfade}' in prompt.user_text


def test_budget_impossible(hexparse_bug):
    huge = hexparse_bug.buggy_source + '#' * 3000
    with pytest.raises(BudgetImpossible):
        build_repair_prompt(huge, hex_pairs(1), [], DependencySet(), None, 'Python', PromptBudget(2000))
    with pytest.raises(ValueError):
        PromptBudget(1999)


def test_fault_line_marker(hexparse_bug):
    prompt = build_repair_prompt(hexparse_bug.buggy_source, hex_pairs(1), [], DependencySet(),
                                 {4}, 'Python', PromptBudget())
    assert prompt.text + '\n' == golden('line_marker.txt')
    assert annotate_fault_lines('a\nb\nc', [2]) == f'a\nb {BUG_MARKER}\nc'
    assert annotate_fault_lines('a\nb', None) == 'a\nb'


def test_augment_prompt(hexparse_bug, fixed_source):
    prompt = build_augment_prompt(hexparse_bug.buggy_source, [fixed_source], 'Python')
    assert prompt.text + '\n' == golden('augment_1.txt')


def test_augment_prompt_lists_fixes_in_order(hexparse_bug):
    patches = ['def createNumber(str):\n    return 1', 'def createNumber(str):\n    return 2',
               'def createNumber(str):\n    return 3']
    text = build_augment_prompt(hexparse_bug.buggy_source, patches, 'Python').user_text
    positions = [text.index(f'Fix {i}:') for i in (1, 2, 3)]
    assert positions == sorted(positions)
    assert text.index('return 1') < text.index('return 2') < text.index('return 3')
    with pytest.raises(ValueError):
        build_augment_prompt(hexparse_bug.buggy_source, [], 'Python')


def test_system_text_article():
    assert system_text('Python') == 'You are a Python program repair expert.'
    assert system_text('OCaml') == 'You are an OCaml program repair expert.'


# ------------------- patch extraction -------------------
def test_extract_first_fenced_block():
    response = 'Fixed:\n```java\n\nint f() { return 1; }\n\n```\nor\n```\nint g() {}\n```'
    assert extract_patch(response, 'f') == 'int f() { return 1; }'


def test_extract_unfenced_function_body():
    response = ('Try this:\npublic int createNumber(String s) {\n    if (s == null) {\n        return 0;\n'
                '    }\n    return 1;\n}\nThat should work.')
    assert extract_patch(response, 'createNumber') == (
        'public int createNumber(String s) {\n    if (s == null) {\n        return 0;\n    }\n    return 1;\n}')


@pytest.mark.parametrize('response', [
    'The problem lies in how the hexadecimal prefix is recognized.',
    'Here it is:\n```\n\n```',
    'class Other { void g() {} }',
])
def test_no_patch_found(response):
    with pytest.raises(NoPatchFound):
        extract_patch(response, 'createNumber')
