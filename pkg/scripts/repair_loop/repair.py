"""
Conversational repair session.

The session collects passing and failing tests, synthesizes passing tests
close to the failing ones, and then alternates restarting repair (fresh pairs,
original source) with continuous repair (latest patch, refreshed feedback)
until a patch passes the full suite or the query budget is spent.
"""

import json
import logging
import time
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, List, Optional, Tuple

from ..config import Config
from ..errors import AdapterUnavailable, NoPatchFound, RepairError
from ..input_generation.mutation import MutationConfig
from ..test_harness.adapter import (HarnessConfig, capture_args, run_suite,
                                    run_test, validate_candidates)
from ..test_harness.models import OracleKind, SuiteResult, TestCase
from .context import (DependencySet, Traceback, dedupe_tracebacks,
                      extract_dependents)
from .llm import CompletionProvider, CompletionRequest, ProviderConfig
from .pairing import Feedback, PairConfig, PairPool, augment_passing
from .prompting import (PromptBudget, build_augment_prompt,
                        build_repair_prompt, extract_patch)

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class RepairBudget:
    m: int = 40
    n: int = 3
    augment_budget: int = 40
    k: int = 2

    def __post_init__(self):
        for name in ('m', 'n', 'k'):
            if getattr(self, name) < 1:
                raise ValueError(f'{name} must be >= 1, got {getattr(self, name)}')
        if self.augment_budget < 0:
            raise ValueError(f'augment_budget must be >= 0, got {self.augment_budget}')

    @property
    def query_ceiling(self) -> int:
        """Most queries a session can spend, augmentation included."""
        return self.m * self.n + self.augment_budget

    @classmethod
    def from_config(cls, **overrides):
        b = Config.REPAIR_BUDGET
        settings = dict(m=b['M'], n=b['N'], augment_budget=b['AUGMENT_BUDGET'], k=Config.PAIRING['K'])
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


@dataclass(frozen=True)
class SessionConfig:
    """Every configuration a repair session reads."""
    budget: RepairBudget
    mutation: MutationConfig
    pairing: PairConfig
    harness: HarnessConfig
    prompt: PromptBudget
    provider: ProviderConfig
    dependent_char_budget: int = 4000
    augment_phase_secs: float = 25 * 60
    use_context: bool = True

    @classmethod
    def from_config(cls, budget=None, mutation=None, pairing=None, harness=None,
                    prompt=None, provider=None):
        budget = budget or RepairBudget.from_config()
        return cls(budget=budget,
                   mutation=mutation or MutationConfig.from_config(),
                   pairing=pairing or PairConfig.from_config(k=budget.k),
                   harness=harness or HarnessConfig.from_config(),
                   prompt=prompt or PromptBudget.from_config(),
                   provider=provider or ProviderConfig.from_config(),
                   dependent_char_budget=Config.PROMPT['DEPENDENT_CHAR_BUDGET'],
                   augment_phase_secs=Config.MUTATION['PHASE_BUDGET_SECS'],
                   use_context=Config.PROMPT['USE_CONTEXT'])


class Status(str, Enum):
    PLAUSIBLE = 'plausible'
    EXHAUSTED = 'exhausted'
    ERROR = 'error'


@dataclass(frozen=True)
class RepairMetrics:
    query_count: int
    plausible_count: int
    wall_seconds: float
    # 1-based restart that produced the first plausible patch; 0 when the original passes
    plausible_restart: Optional[int] = None


@dataclass(frozen=True)
class RepairOutcome:
    status: Status
    patches: Tuple[str, ...]
    metrics: RepairMetrics

    def __post_init__(self):
        if self.status is Status.PLAUSIBLE and not self.patches:
            raise ValueError('A plausible outcome carries at least one patch')

    def report_row(self, bug_id: str) -> dict:
        return {'id': bug_id, 'status': self.status.value,
                'queryCount': self.metrics.query_count,
                'plausibleCount': self.metrics.plausible_count,
                'wallSeconds': round(self.metrics.wall_seconds, 3),
                'plausibleRestart': self.metrics.plausible_restart}


@dataclass(frozen=True)
class ConversationRecord:
    iter1: int
    iter2: int
    phase: str
    prompt: str
    response: str
    verdict: str
    ts: str

    def to_json(self) -> str:
        return json.dumps(asdict(self), ensure_ascii=False)


@dataclass
class SessionState:
    iter1: int = 0
    iter2: int = 0
    tmp: str = ''
    pool: Optional[PairPool] = None
    log: List[ConversationRecord] = field(default_factory=list)
    query_count: int = 0


def _utc_now():
    return datetime.now(timezone.utc)


class RepairSession:
    """
    One repair attempt for one bug.

    Args:
        bug: BugSpec of the buggy function
        cfg: SessionConfig
        provider: Completion provider
        on_restart: Called with the SessionState at every restart boundary
        on_phase: Called as on_phase(phase_num, phase_name, status, elapsed_time)
        clock: Returns the current datetime for log timestamps
    """

    def __init__(self, bug, cfg: SessionConfig, provider: CompletionProvider,
                 on_restart: Optional[Callable[[SessionState], None]] = None,
                 on_phase: Optional[Callable] = None, clock: Callable[[], datetime] = _utc_now):
        self.bug = bug
        self.cfg = cfg
        self.provider = provider
        self.on_restart = on_restart
        self.on_phase = on_phase
        self.clock = clock
        self.state = SessionState(tmp=bug.buggy_source, pool=PairPool(cfg.pairing))
        self.recorded: List[TestCase] = []
        self.fails: List[TestCase] = []
        self.passes: List[TestCase] = []
        self.mutants: List[TestCase] = []
        self.started = None

    # ------------------- Phase plumbing -------------------
    def _phase(self, number, name, status, started=None):
        elapsed = None if started is None else time.monotonic() - started
        if self.on_phase is not None:
            self.on_phase(number, name, status, elapsed)
        logger.info(f'Phase {number} {name}: {status}')

    def _outcome(self, status: Status, patches, plausible_restart=None) -> RepairOutcome:
        wall = 0.0 if self.started is None else time.monotonic() - self.started
        metrics = RepairMetrics(self.state.query_count, len(patches), wall, plausible_restart)
        logger.info(f'Bug {self.bug.id}: {status.value} after {metrics.query_count} queries '
                    f'({metrics.plausible_count} plausible patches)')
        return RepairOutcome(status, tuple(patches), metrics)

    def aborted_outcome(self) -> RepairOutcome:
        """Metrics gathered before an operational error stopped the session."""
        return self._outcome(Status.ERROR, [])

    def _query(self, prompt) -> str:
        request = CompletionRequest.from_prompt(prompt, self.cfg.provider.model,
                                                self.cfg.provider.temperature)
        before = self.provider.stats.query_count
        try:
            return self.provider.complete(request)
        finally:
            self.state.query_count += self.provider.stats.query_count - before

    def _record(self, phase, prompt, response, verdict):
        self.state.log.append(ConversationRecord(self.state.iter1, self.state.iter2, phase, prompt.text,
                                                 response, verdict, self.clock().isoformat()))
        logger.info(f'[{phase} {self.state.iter1}.{self.state.iter2}] verdict {verdict} '
                    f'(queries so far: {self.state.query_count})')

    # ------------------- Algorithm steps -------------------
    def collect(self) -> SuiteResult:
        """Capture recorded inputs and run the suite on the original source."""
        self.recorded = capture_args(self.bug, self.cfg.harness)
        suite = run_suite(self.bug.buggy_source, self.bug, self.cfg.harness, self.recorded)
        self.fails = suite.failing_cases
        failing_ids = {case.test_id for case in self.fails}
        passing_ids = {case.test_id for case in suite.passing}
        # further invocations recorded by a passing test are passing inputs too
        self.passes = list(suite.passing) + [case for case in self.recorded
                                             if case.test_id in passing_ids and case.test_id != case.id]
        for case in self.recorded:
            if case.test_id not in failing_ids | passing_ids:
                logger.warning(f'Captured invocation {case.id} belongs to no declared test')
        return suite

    def augment_passing_tests(self):
        """Synthesize passing mutants for every exception-oracle failing test (once)."""
        known = {case.key for case in self.passes + self.fails}
        deadline = time.monotonic() + self.cfg.augment_phase_secs
        for fail in self.fails:
            if fail.oracle_kind is not OracleKind.EXCEPTION:
                continue
            remaining = deadline - time.monotonic()
            for case in augment_passing(fail, self.bug, self.cfg.mutation, self.cfg.harness, remaining):
                if case.key not in known:
                    known.add(case.key)
                    self.mutants.append(case)

    def refresh_feedback(self, tmp: str, feedback: Feedback):
        """Re-run the selected failing tests on `tmp`; return (tracebacks, dependents)."""
        tracebacks = []
        for case in feedback.failing_cases:
            verdict = run_test(tmp, case, self.bug, self.cfg.harness)
            if not verdict.is_pass:
                tracebacks.append(Traceback.from_failure(verdict.failure_text(), verdict.frames))
        tracebacks = dedupe_tracebacks(tracebacks)
        if not self.cfg.use_context:
            return tracebacks, DependencySet()
        dependents = extract_dependents(tmp, self.bug.buggy_name, tracebacks, self.bug.project_index,
                                        self.cfg.dependent_char_budget)
        return tracebacks, dependents

    def rebuild_pool(self, patch: str, suite: SuiteResult):
        """Re-pair the tests failing under `patch` with the recorded and mutated tests it passes."""
        still_passing = [case for case, verdict in
                         validate_candidates(self.mutants, patch, self.bug, self.cfg.harness)
                         if verdict.is_pass]
        self.state.pool.rebuild(suite.failing_cases, list(suite.passing) + still_passing)

    def augment_patches(self, first: str) -> List[str]:
        """
        Ask for alternative plausible patches, validating each on the full suite.

        An operational error other than a missing adapter ends augmentation
        and keeps the patches validated so far.
        """
        plausible = [first]
        seen = {' '.join(first.split())}
        for index in range(self.cfg.budget.augment_budget):
            self.state.iter2 = index
            prompt = build_augment_prompt(self.bug.buggy_source, plausible, self.bug.lang_label)
            sent = self.state.query_count
            response = ''
            try:
                response = self._query(prompt)
                patch = extract_patch(response, self.bug.buggy_name)
                suite = run_suite(patch, self.bug, self.cfg.harness, self.recorded)
            except NoPatchFound:
                self._record('augment', prompt, response, 'no_patch')
                continue
            except AdapterUnavailable:
                raise
            except RepairError as e:
                if self.state.query_count > sent:
                    self._record('augment', prompt, response, 'error')
                logger.warning(f'Patch augmentation stopped early: {type(e).__name__}: {e}')
                break
            self._record('augment', prompt, response, 'plausible' if suite.all_pass else 'failing')
            key = ' '.join(patch.split())
            if suite.all_pass and key not in seen:
                seen.add(key)
                plausible.append(patch)
        return plausible

    def run(self) -> RepairOutcome:
        """
        Run collection, test augmentation, conversational repair and patch augmentation.

        Raises:
            RepairError: an operational error (e.g. AdapterUnavailable, TransportError)
                aborted the session; aborted_outcome() holds the partial metrics
        """
        self.started = time.monotonic()
        try:
            return self._run()
        except RepairError as e:
            logger.error(f'Bug {self.bug.id}: session aborted after {self.state.query_count} queries: '
                         f'{type(e).__name__}: {e}')
            raise

    def _run(self) -> RepairOutcome:
        bug, budget = self.bug, self.cfg.budget
        original = bug.buggy_source

        t = time.monotonic()
        self._phase(1, 'COLLECT', 'started')
        suite = self.collect()
        self._phase(1, 'COLLECT', 'completed', t)
        if suite.all_pass:
            logger.info(f'Bug {bug.id}: original source already passes every test')
            return self._outcome(Status.PLAUSIBLE, [original], plausible_restart=0)

        t = time.monotonic()
        self._phase(2, 'TEST AUGMENTATION', 'started')
        self.augment_passing_tests()
        self._phase(2, 'TEST AUGMENTATION', 'completed', t)

        t = time.monotonic()
        self._phase(3, 'CONVERSATIONAL REPAIR', 'started')
        pool = self.state.pool
        for iter1 in range(budget.m):
            self.state.iter1, self.state.iter2 = iter1, 0
            self.state.tmp = original
            pool.rebuild(self.fails, self.passes + self.mutants)
            if self.on_restart is not None:
                self.on_restart(self.state)
            feedback = pool.select()

            for iter2 in range(budget.n):
                self.state.iter2 = iter2
                tmp = self.state.tmp
                tracebacks, dependents = self.refresh_feedback(tmp, feedback)
                # fault lines refer to the original source only
                marked = bug.marked_lines if tmp == original else None
                prompt = build_repair_prompt(tmp, feedback, tracebacks, dependents, marked,
                                             bug.lang_label, self.cfg.prompt)
                response = self._query(prompt)
                try:
                    patch = extract_patch(response, bug.buggy_name)
                except NoPatchFound:
                    self._record('repair', prompt, response, 'no_patch')
                    continue

                patched = run_suite(patch, bug, self.cfg.harness, self.recorded)
                if patched.all_pass:
                    self._record('repair', prompt, response, 'plausible')
                    self._phase(3, 'CONVERSATIONAL REPAIR', 'completed', t)
                    t = time.monotonic()
                    self._phase(4, 'PATCH AUGMENTATION', 'started')
                    patches = self.augment_patches(patch)
                    self._phase(4, 'PATCH AUGMENTATION', 'completed', t)
                    return self._outcome(Status.PLAUSIBLE, patches, plausible_restart=iter1 + 1)

                self._record('repair', prompt, response, 'failing')
                self.state.tmp = patch
                self.rebuild_pool(patch, patched)
                feedback = pool.select()

        self._phase(3, 'CONVERSATIONAL REPAIR', 'completed', t)
        return self._outcome(Status.EXHAUSTED, [])


def repair_bug(bug, cfg: SessionConfig, provider: CompletionProvider, **hooks) -> RepairOutcome:
    """Run a full repair session; see RepairSession for the hooks."""
    return RepairSession(bug, cfg, provider, **hooks).run()
