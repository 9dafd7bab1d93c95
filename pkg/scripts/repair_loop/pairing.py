"""
Contrastive pair pool: admission by similarity, augmentation with validated
mutants, and selection with anti-repetition priority.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import PAIR_SELECTIONS, Config
from ..input_generation.mutation import MutationConfig, generate_candidates
from ..input_generation.similarity import delta
from ..test_harness.adapter import HarnessConfig, validate_candidates
from ..test_harness.models import OracleKind, TestCase

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PairConfig:
    """
    Pair admission and selection settings.

    Args:
        theta: Similarity a pair must exceed
        k: Pairs (or failing tests, without pairs) shown per prompt
        selection: 'similarity' ranks by similarity, 'random' draws uniformly
        use_pairs: False shows failing tests only, even when pairs exist
        seed: Seed of the random selection
    """
    theta: float = 0.5
    k: int = 2
    selection: str = 'similarity'
    use_pairs: bool = True
    seed: int = 0

    def __post_init__(self):
        if not 0 <= self.theta < 1:
            raise ValueError(f'theta must be in [0, 1), got {self.theta}')
        if self.k < 1:
            raise ValueError(f'k must be >= 1, got {self.k}')
        if self.selection not in PAIR_SELECTIONS:
            raise ValueError(f'selection must be one of {PAIR_SELECTIONS}, got {self.selection!r}')

    @classmethod
    def from_config(cls, **overrides):
        p = Config.PAIRING
        settings = dict(theta=p['THETA'], k=p['K'], selection=p['SELECTION'],
                        use_pairs=p['USE_PAIRS'], seed=Config.MUTATION['SEED'])
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


@dataclass(eq=False)
class TestPair:
    __test__ = False

    fail: TestCase
    passing: TestCase
    sim: float
    times_selected: int = 0

    @property
    def key(self) -> Tuple[str, str]:
        return self.fail.id, self.passing.id


def _unique_by_id(cases: Sequence[TestCase]) -> Tuple[TestCase, ...]:
    seen = set()
    unique = []
    for case in cases:
        if case.id not in seen:
            seen.add(case.id)
            unique.append(case)
    return tuple(unique)


@dataclass(frozen=True)
class PairSet:
    pairs: Tuple[TestPair, ...]

    def __post_init__(self):
        if not self.pairs:
            raise ValueError('PairSet needs at least one pair')

    @property
    def failing_cases(self) -> Tuple[TestCase, ...]:
        return _unique_by_id([pair.fail for pair in self.pairs])


@dataclass(frozen=True)
class FailOnly:
    fails: Tuple[TestCase, ...]

    def __post_init__(self):
        if not self.fails:
            raise ValueError('FailOnly needs at least one failing test')

    @property
    def failing_cases(self) -> Tuple[TestCase, ...]:
        return self.fails


Feedback = Union[PairSet, FailOnly]


def build_pool(fails: Sequence[TestCase], passes: Sequence[TestCase], cfg: PairConfig,
               counters: Optional[Dict[Tuple[str, str], int]] = None) -> List[TestPair]:
    """
    Pair every failing test with every passing test whose similarity exceeds theta.

    Args:
        fails: Failing tests
        passes: Passing tests (recorded and validated mutants)
        cfg: Pair configuration
        counters: Selection counts keyed by (fail.id, pass.id), carried over

    Returns:
        Pairs ordered by descending similarity, then (fail.id, pass.id)
    """
    counters = counters or {}
    pool = []
    for fail in fails:
        for passing in passes:
            sim = delta(fail, passing)
            if sim > cfg.theta:
                pool.append(TestPair(fail, passing, sim, counters.get((fail.id, passing.id), 0)))
    pool.sort(key=lambda pair: (-pair.sim, pair.fail.id, pair.passing.id))
    return pool


def select_pairs(pool: List[TestPair], k: int, fails: Sequence[TestCase] = ()) -> Feedback:
    """
    Pick the k least-selected pairs (ties: higher similarity, then pool order).

    Falls back to the failing tests alone when the pool is empty.
    """
    if not pool:
        return FailOnly(_unique_by_id(fails))
    ranked = sorted(range(len(pool)), key=lambda i: (pool[i].times_selected, -pool[i].sim, i))
    chosen = [pool[i] for i in ranked[:k]]
    for pair in chosen:
        pair.times_selected += 1
    return PairSet(tuple(chosen))


def select_random_pairs(pool: List[TestPair], k: int, rng: np.random.Generator) -> PairSet:
    """Pick k distinct pairs uniformly at random, ignoring similarity and past selections."""
    picked = rng.choice(len(pool), size=min(k, len(pool)), replace=False)
    chosen = [pool[int(i)] for i in picked]
    for pair in chosen:
        pair.times_selected += 1
    return PairSet(tuple(chosen))


def select_fails(fails: Sequence[TestCase], k: int, counters: Dict[str, int]) -> FailOnly:
    """Pick the k least-shown failing tests (ties: input order) and count them as shown."""
    unique = _unique_by_id(fails)
    ranked = sorted(range(len(unique)), key=lambda i: (counters.get(unique[i].id, 0), i))
    chosen = tuple(unique[i] for i in ranked[:k])
    for case in chosen:
        counters[case.id] = counters.get(case.id, 0) + 1
    return FailOnly(chosen)


@dataclass
class PairPool:
    """Session-local pool whose selection counters survive rebuilds."""
    cfg: PairConfig
    pairs: List[TestPair] = field(default_factory=list)
    fails: List[TestCase] = field(default_factory=list)
    counters: Dict[Tuple[str, str], int] = field(default_factory=dict)
    fail_counters: Dict[str, int] = field(default_factory=dict)
    rng: np.random.Generator = field(init=False, repr=False)

    def __post_init__(self):
        self.rng = np.random.default_rng(self.cfg.seed)

    def rebuild(self, fails: Sequence[TestCase], passes: Sequence[TestCase]):
        self.fails = list(fails)
        self.pairs = build_pool(fails, passes, self.cfg, self.counters)
        logger.info(f'Pair pool rebuilt: {len(self.pairs)} pairs from '
                    f'{len(self.fails)} failing x {len(passes)} passing tests')

    def select(self) -> Feedback:
        if not self.cfg.use_pairs:
            return select_fails(self.fails, self.cfg.k, self.fail_counters)
        if self.cfg.selection == 'random' and self.pairs:
            feedback = select_random_pairs(self.pairs, self.cfg.k, self.rng)
        else:
            feedback = select_pairs(self.pairs, self.cfg.k, self.fails)
        if isinstance(feedback, PairSet):
            for pair in feedback.pairs:
                self.counters[pair.key] = pair.times_selected
        else:
            logger.info('No contrastive pair above threshold; using failing tests only')
        return feedback


def augment_passing(fail: TestCase, bug, mut_cfg: MutationConfig,
                    harness_cfg: Optional[HarnessConfig] = None,
                    budget_secs: Optional[float] = None) -> List[TestCase]:
    """
    Synthesize passing tests similar to `fail` by mutation and validation
    against the original buggy source.

    Only exception-oracle tests can be augmented; other tests yield [].
    """
    if fail.oracle_kind is not OracleKind.EXCEPTION:
        return []
    budget_secs = Config.MUTATION['PHASE_BUDGET_SECS'] if budget_secs is None else budget_secs
    if budget_secs <= 0:
        return []
    deadline = time.monotonic() + budget_secs
    candidates = generate_candidates(fail, mut_cfg)
    validated = validate_candidates(candidates, bug.buggy_source, bug, harness_cfg, deadline)
    passing = [case for case, verdict in validated if verdict.is_pass]
    logger.info(f'{len(passing)} of {len(validated)} validated mutants of {fail.id} pass')
    return passing
