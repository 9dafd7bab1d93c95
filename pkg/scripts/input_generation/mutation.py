"""
Type-aware mutation of failing test inputs.

Each candidate is the failing test with one parameter changed by one operator,
kept as small as possible so that candidates stay similar to the failing test.
"""

import logging
import math
import string
from dataclasses import dataclass, replace
from enum import Enum
from typing import List, Optional, Tuple

import numpy as np

from ..config import Config
from ..errors import Inapplicable, Unparseable
from ..test_harness.models import Provenance, TestCase
from .values import (INT64_MAX, INT64_MIN, ArrayValue, BoolValue, CharValue,
                     FloatValue, IntValue, NullValue, ObjectValue, StrValue,
                     TypedValue, encode_typed, parse_guided, sim_text)

logger = logging.getLogger(__name__)

CHAR_POOL = string.ascii_letters + string.digits + string.punctuation
OP_ATTEMPTS = 8
ATTEMPT_FACTOR = 10


class MutationOp(str, Enum):
    STR_REPLACE_CHAR = 'StrReplaceChar'
    STR_REPLACE_SUBSTRING = 'StrReplaceSubstring'
    STR_INSERT_CHAR = 'StrInsertChar'
    STR_DELETE_CHAR = 'StrDeleteChar'
    STR_SWAP_SUBSTRINGS = 'StrSwapSubstrings'
    STR_CASE_CONVERT = 'StrCaseConvert'
    STR_TRUNC_EXTEND = 'StrTruncExtend'
    NUM_PERTURB = 'NumPerturb'
    NUM_SCALE = 'NumScale'
    NUM_FLIP_SIGN = 'NumFlipSign'
    NUM_MAGNITUDE_PERTURB = 'NumMagnitudePerturb'
    CHAR_REPLACE = 'CharReplace'
    BOOL_NEGATE = 'BoolNegate'
    SEQ_ELEMENT_MUTATE = 'SeqElementMutate'
    SEQ_SWAP = 'SeqSwap'
    SEQ_INSERT = 'SeqInsert'
    SEQ_DELETE = 'SeqDelete'
    SEQ_SHUFFLE = 'SeqShuffle'
    OBJ_FIELD_MUTATE = 'ObjFieldMutate'


STR_OPS = (MutationOp.STR_REPLACE_CHAR, MutationOp.STR_REPLACE_SUBSTRING,
           MutationOp.STR_INSERT_CHAR, MutationOp.STR_DELETE_CHAR,
           MutationOp.STR_SWAP_SUBSTRINGS, MutationOp.STR_CASE_CONVERT,
           MutationOp.STR_TRUNC_EXTEND)
NUM_OPS = (MutationOp.NUM_PERTURB, MutationOp.NUM_SCALE,
           MutationOp.NUM_FLIP_SIGN, MutationOp.NUM_MAGNITUDE_PERTURB)


@dataclass(frozen=True)
class MutationConfig:
    candidate_count: int = 1000
    edit_budget_fraction: float = 0.10
    numeric_delta_max: int = 3
    scale_range: Tuple[float, float] = (0.5, 2.0)
    magnitude_percent_range: Tuple[float, float] = (1.0, 10.0)
    rng_seed: int = 0
    max_params: int = 1
    text_mutation_rate: float = 0.0
    stale_attempt_limit: int = 2000

    def __post_init__(self):
        if self.candidate_count < 1:
            raise ValueError(f'candidate_count must be >= 1, got {self.candidate_count}')
        if not 0 < self.edit_budget_fraction <= 1:
            raise ValueError(f'edit_budget_fraction must be in (0, 1], got {self.edit_budget_fraction}')
        if self.numeric_delta_max < 1:
            raise ValueError(f'numeric_delta_max must be >= 1, got {self.numeric_delta_max}')
        for name in ('scale_range', 'magnitude_percent_range'):
            low, high = getattr(self, name)
            if not 0 < low <= high:
                raise ValueError(f'{name} must have positive, ordered endpoints, got {(low, high)}')
        if not 0 <= self.rng_seed < 2 ** 64:
            raise ValueError(f'rng_seed must be a 64-bit unsigned integer, got {self.rng_seed}')
        if self.max_params < 1:
            raise ValueError(f'max_params must be >= 1, got {self.max_params}')
        if not 0 <= self.text_mutation_rate <= 1:
            raise ValueError(f'text_mutation_rate must be in [0, 1], got {self.text_mutation_rate}')

    @classmethod
    def from_config(cls, **overrides):
        m = Config.MUTATION
        settings = dict(candidate_count=m['CANDIDATE_COUNT'],
                        edit_budget_fraction=m['EDIT_BUDGET_FRACTION'],
                        numeric_delta_max=m['NUMERIC_DELTA_MAX'],
                        scale_range=tuple(m['SCALE_RANGE']),
                        magnitude_percent_range=tuple(m['MAGNITUDE_PERCENT_RANGE']),
                        rng_seed=m['SEED'], max_params=m['MAX_PARAMS'],
                        text_mutation_rate=m['TEXT_MUTATION_RATE'],
                        stale_attempt_limit=m['STALE_ATTEMPT_LIMIT'])
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


def edit_budget(length: int, fraction: float) -> int:
    """Maximum atomic edits one string operator may make: max(1, ceil(fraction * len))."""
    return max(1, math.ceil(fraction * length))


def is_mutable(v: TypedValue) -> bool:
    """Whether some operator can change `v`."""
    if isinstance(v, NullValue):
        return False
    if isinstance(v, FloatValue):
        return not math.isnan(v.value)
    if isinstance(v, ArrayValue):
        return len(v.items) > 0
    if isinstance(v, ObjectValue):
        return any(is_mutable(item) for _, item in v.entries)
    return True


def _cased_positions(s: str) -> List[int]:
    return [i for i, c in enumerate(s) if c.swapcase() != c and len(c.swapcase()) == 1]


class Mutator:
    """
    Seeded mutation engine.

    All randomness comes from one numpy Generator, so a fixed seed replays
    the same sequence of mutants.
    """

    def __init__(self, cfg: MutationConfig, rng: Optional[np.random.Generator] = None):
        self.cfg = cfg
        self.rng = rng if rng is not None else np.random.default_rng(cfg.rng_seed)
        self.last_op = None

    # ------------------- random helpers -------------------
    def randint(self, low: int, high: int) -> int:
        """Uniform integer in [low, high]."""
        return int(self.rng.integers(low, high + 1))

    def pick(self, seq):
        return seq[int(self.rng.integers(len(seq)))]

    def random_char(self, exclude: Optional[str] = None) -> str:
        pool = CHAR_POOL if exclude is None else CHAR_POOL.replace(exclude, '')
        return self.pick(pool)

    def permuted(self, seq):
        return [seq[i] for i in self.rng.permutation(len(seq))]

    # ------------------- operator selection -------------------
    def applicable_ops(self, v: TypedValue) -> List[MutationOp]:
        if isinstance(v, StrValue):
            n = len(v.value)
            ops = [MutationOp.STR_INSERT_CHAR, MutationOp.STR_TRUNC_EXTEND]
            if n >= 1:
                ops += [MutationOp.STR_REPLACE_CHAR, MutationOp.STR_REPLACE_SUBSTRING,
                        MutationOp.STR_DELETE_CHAR]
            if n >= 2 and len(set(v.value)) > 1:
                ops.append(MutationOp.STR_SWAP_SUBSTRINGS)
            if _cased_positions(v.value):
                ops.append(MutationOp.STR_CASE_CONVERT)
            return sorted(ops, key=STR_OPS.index)
        if isinstance(v, (IntValue, FloatValue)):
            if isinstance(v, FloatValue) and math.isnan(v.value):
                return []
            if isinstance(v, FloatValue) and math.isinf(v.value):
                return [MutationOp.NUM_FLIP_SIGN]
            return list(NUM_OPS)
        if isinstance(v, CharValue):
            return [MutationOp.CHAR_REPLACE]
        if isinstance(v, BoolValue):
            return [MutationOp.BOOL_NEGATE]
        if isinstance(v, ArrayValue):
            items = v.items
            ops = []
            if any(is_mutable(item) for item in items):
                ops.append(MutationOp.SEQ_ELEMENT_MUTATE)
            distinct = len({encode_typed(item) for item in items}) > 1
            if distinct:
                ops.append(MutationOp.SEQ_SWAP)
            if items:
                ops += [MutationOp.SEQ_INSERT, MutationOp.SEQ_DELETE]
            if distinct:
                ops.append(MutationOp.SEQ_SHUFFLE)
            return ops
        if isinstance(v, ObjectValue):
            return [MutationOp.OBJ_FIELD_MUTATE] if is_mutable(v) else []
        return []

    def mutate_value(self, v: TypedValue) -> TypedValue:
        """
        Apply exactly one applicable operator, chosen uniformly.

        An operator whose draw leaves the value unchanged is retried, then the
        next operator in the random order is tried.

        Raises:
            Inapplicable: no operator can change `v` (Null, NaN, empty containers).
        """
        ops = self.applicable_ops(v)
        if not ops:
            raise Inapplicable(f'No mutation operator applies to {v!r}')
        original = encode_typed(v)
        for op in self.permuted(ops):
            for _ in range(OP_ATTEMPTS):
                result = self.apply_op(op, v)
                if result is not None and encode_typed(result) != original:
                    self.last_op = op
                    return result
        raise Inapplicable(f'Mutation domain of {v!r} is exhausted')

    def apply_op(self, op: MutationOp, v: TypedValue) -> Optional[TypedValue]:
        """Apply one operator once; None when this draw produced nothing usable."""
        if op in STR_OPS:
            text = self.mutate_text(op, v.value)
            return None if text is None else StrValue(text)
        if op in NUM_OPS:
            return self.mutate_number(op, v)
        if op is MutationOp.CHAR_REPLACE:
            return CharValue(self.random_char(exclude=v.value))
        if op is MutationOp.BOOL_NEGATE:
            return BoolValue(not v.value)
        if op is MutationOp.OBJ_FIELD_MUTATE:
            indices = [i for i, (_, item) in enumerate(v.entries) if is_mutable(item)]
            index = self.pick(indices)
            entries = list(v.entries)
            name, item = entries[index]
            entries[index] = (name, self.mutate_value(item))
            return ObjectValue(tuple(entries))
        return self.mutate_sequence(op, v)

    # ------------------- strings -------------------
    def mutate_text(self, op: MutationOp, s: str) -> Optional[str]:
        n = len(s)
        budget = edit_budget(n, self.cfg.edit_budget_fraction)
        chars = list(s)

        if op is MutationOp.STR_REPLACE_CHAR:
            count = self.randint(1, min(budget, n))
            for i in sorted(int(p) for p in self.rng.choice(n, size=count, replace=False)):
                chars[i] = self.random_char(exclude=chars[i])
            return ''.join(chars)

        if op is MutationOp.STR_REPLACE_SUBSTRING:
            length = self.randint(1, min(budget, n))
            start = self.randint(0, n - length)
            chars[start:start + length] = [self.random_char() for _ in range(length)]
            return ''.join(chars)

        if op is MutationOp.STR_INSERT_CHAR:
            for _ in range(self.randint(1, budget)):
                chars.insert(self.randint(0, len(chars)), self.random_char())
            return ''.join(chars)

        if op is MutationOp.STR_DELETE_CHAR:
            count = self.randint(1, min(budget, n))
            doomed = {int(p) for p in self.rng.choice(n, size=count, replace=False)}
            return ''.join(c for i, c in enumerate(chars) if i not in doomed)

        if op is MutationOp.STR_SWAP_SUBSTRINGS:
            length = self.randint(1, min(budget, n // 2))
            first = self.randint(0, n - 2 * length)
            second = self.randint(first + length, n - length)
            a, b = chars[first:first + length], chars[second:second + length]
            chars[second:second + length] = a
            chars[first:first + length] = b
            return ''.join(chars)

        if op is MutationOp.STR_CASE_CONVERT:
            cased = _cased_positions(s)
            count = self.randint(1, min(budget, len(cased)))
            for i in self.rng.choice(len(cased), size=count, replace=False):
                pos = cased[int(i)]
                chars[pos] = chars[pos].swapcase()
            return ''.join(chars)

        if op is MutationOp.STR_TRUNC_EXTEND:
            if n and self.rng.random() < 0.5:
                return s[:n - self.randint(1, min(budget, n))]
            alphabet = sorted(set(s)) or string.ascii_letters
            return s + ''.join(self.pick(alphabet) for _ in range(self.randint(1, budget)))

        raise ValueError(f'{op} is not a string operator')

    # ------------------- numbers -------------------
    def mutate_number(self, op: MutationOp, v) -> Optional[TypedValue]:
        x = v.value
        is_int = isinstance(v, IntValue)
        sign = 1 if self.rng.random() < 0.5 else -1

        if op is MutationOp.NUM_FLIP_SIGN:
            result = -x
        elif op is MutationOp.NUM_PERTURB:
            if is_int:
                step = self.randint(1, self.cfg.numeric_delta_max)
            else:
                # uniform in (0, numeric_delta_max]
                step = self.cfg.numeric_delta_max - self.rng.uniform(0, self.cfg.numeric_delta_max)
            result = x + sign * step
        elif op is MutationOp.NUM_SCALE:
            result = x * self.rng.uniform(*self.cfg.scale_range)
        elif op is MutationOp.NUM_MAGNITUDE_PERTURB:
            percent = self.rng.uniform(*self.cfg.magnitude_percent_range)
            result = x + sign * (percent / 100.0) * abs(x)
        else:
            raise ValueError(f'{op} is not a numeric operator')

        if is_int:
            if isinstance(result, float):
                if not math.isfinite(result):
                    return None
                result = int(round(result))
            if not INT64_MIN <= result <= INT64_MAX:
                return None
            return IntValue(result)
        if math.isinf(x):
            return FloatValue(result)
        return FloatValue(result) if math.isfinite(result) else None

    # ------------------- sequences -------------------
    def mutate_sequence(self, op: MutationOp, v: ArrayValue) -> Optional[ArrayValue]:
        items = list(v.items)
        n = len(items)

        if op is MutationOp.SEQ_ELEMENT_MUTATE:
            index = self.pick([i for i, item in enumerate(items) if is_mutable(item)])
            items[index] = self.mutate_value(items[index])
        elif op is MutationOp.SEQ_SWAP:
            i, j = (int(p) for p in self.rng.choice(n, size=2, replace=False))
            if encode_typed(items[i]) == encode_typed(items[j]):
                return None
            items[i], items[j] = items[j], items[i]
        elif op is MutationOp.SEQ_INSERT:
            items.insert(self.randint(0, n), self.pick(items))
        elif op is MutationOp.SEQ_DELETE:
            del items[self.randint(0, n - 1)]
        elif op is MutationOp.SEQ_SHUFFLE:
            # Fisher-Yates; an identity permutation is rejected by the caller
            for i in range(n - 1, 0, -1):
                j = self.randint(0, i)
                items[i], items[j] = items[j], items[i]
        else:
            raise ValueError(f'{op} is not a sequence operator')
        return ArrayValue(tuple(items))

    # ------------------- text-level mutation -------------------
    def mutate_via_text(self, v: TypedValue) -> TypedValue:
        """
        Mutate the similarity text of `v` with a string operator and parse it
        back into the shape of `v`. Unparseable draws are discarded.
        """
        original = sim_text(v)
        skeleton_key = encode_typed(v)
        ops = self.applicable_ops(StrValue(original))
        for _ in range(OP_ATTEMPTS):
            text = self.mutate_text(self.pick(ops), original)
            try:
                result = parse_guided(text, v)
            except Unparseable:
                continue
            if encode_typed(result) != skeleton_key:
                return result
        raise Inapplicable(f'No parseable text mutant of {original!r}')

    def mutate_param(self, v: TypedValue) -> TypedValue:
        rate = self.cfg.text_mutation_rate
        if rate > 0 and not isinstance(v, StrValue) and is_mutable(v) and self.rng.random() < rate:
            try:
                return self.mutate_via_text(v)
            except Inapplicable:
                logger.debug(f'Text-level mutation gave nothing for {v!r}; using typed operators')
        return self.mutate_value(v)

    # ------------------- test cases -------------------
    def mutate_test_case(self, case: TestCase) -> TestCase:
        """Mutate 1..max_params parameters of `case`, one operator each."""
        if len(case.params) == 0:
            raise Inapplicable(f'Test {case.id} has no parameters')
        wanted = self.randint(1, self.cfg.max_params) if self.cfg.max_params > 1 else 1
        params = case.params
        mutated = 0
        for index in self.rng.permutation(len(params)):
            if mutated == wanted:
                break
            _, value = params.params[int(index)]
            if not is_mutable(value):
                continue
            try:
                params = params.replace(int(index), self.mutate_param(value))
            except Inapplicable:
                continue
            mutated += 1
        if mutated == 0:
            raise Inapplicable(f'Every parameter of {case.id} is immutable')
        return TestCase(id=f'{case.id}~mut', params=params, provenance=Provenance.MUTATED,
                        oracle_kind=case.oracle_kind)


def mutate_value(v: TypedValue, cfg: MutationConfig, rng: np.random.Generator) -> TypedValue:
    return Mutator(cfg, rng).mutate_value(v)


def mutate_test_case(case: TestCase, cfg: MutationConfig, rng: np.random.Generator) -> TestCase:
    return Mutator(cfg, rng).mutate_test_case(case)


def generate_candidates(case: TestCase, cfg: MutationConfig) -> List[TestCase]:
    """
    Generate up to cfg.candidate_count distinct mutants of a failing test.

    Args:
        case: The failing test to mutate
        cfg: Mutation configuration (seeded)

    Returns:
        List of mutated TestCases, deduplicated by encoding, none equal to `case`.
        Shorter than candidate_count when the value domain runs out.
    """
    mutator = Mutator(cfg)
    seen = {case.key}
    candidates = []
    stale = 0
    for _ in range(cfg.candidate_count * ATTEMPT_FACTOR):
        if len(candidates) >= cfg.candidate_count or stale >= cfg.stale_attempt_limit:
            break
        try:
            mutant = mutator.mutate_test_case(case)
        except Inapplicable as e:
            logger.info(f'No candidates for {case.id}: {e}')
            break
        if mutant.key in seen:
            stale += 1
            continue
        stale = 0
        seen.add(mutant.key)
        candidates.append(replace(mutant, id=f'{case.id}~m{len(candidates) + 1}'))
    logger.info(f'Generated {len(candidates)} candidates for {case.id}')
    return candidates
