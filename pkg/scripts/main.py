"""
Pairfix - Main Control Script

This script is the command-line entry point of the repair pipeline:
1. repair: repair one bug through conversation with a completion provider
2. gen-tests: run the test-input mutation stage alone and write the candidates
3. report: aggregate per-bug report rows

Run it as `python -m scripts.main <command> ...`. Exit codes: 0 success
(plausible patch), 2 budget exhausted, 1 operational error.
"""

import argparse
import json
import logging
import sys
import time
from pathlib import Path

from .bug_spec import load_bug_spec
from .config import PAIR_SELECTIONS, Config
from .errors import RepairError
from .input_generation.mutation import MutationConfig, generate_candidates
from .input_generation.similarity import delta
from .input_generation.values import to_envelope
from .repair_loop.llm import LiveProvider, ProviderConfig, mock_from_script
from .repair_loop.repair import RepairSession, SessionConfig, Status
from .reporting import build_report, collect_report_rows
from .test_harness.adapter import (HarnessConfig, capture_args, run_suite,
                                   validate_candidates)
from .test_harness.models import OracleKind

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_EXHAUSTED = 2

# flag destination -> config-file key
CLI_KEYS = {'m': 'm', 'n': 'n', 'k': 'k', 'theta': 'theta', 'seed': 'seed',
            'candidates': 'candidates', 'timeout_secs': 'timeout_secs',
            'augment_budget': 'augment_budget', 'workers': 'workers',
            'text_mutation_rate': 'text_mutation_rate', 'selection': 'selection',
            'use_pairs': 'use_pairs', 'use_context': 'use_context'}


class UsageError(Exception):
    """Command-line arguments could not be parsed."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


def setup_logging(level=None):
    """Configure file logging once, the same way for every command."""
    log_dir = Path(Config.PATHS['LOGS'])
    log_dir.mkdir(parents=True, exist_ok=True)
    level = (level or Config.LOGGING['LEVEL']).upper()
    logging.basicConfig(
        filename=log_dir / Config.LOGGING['FILENAME'],
        level=getattr(logging, level, logging.INFO),
        format=Config.LOGGING['FORMAT'],
        datefmt=Config.LOGGING['DATEFMT']
    )


def report_progress(phase_num, phase_name, status, elapsed_time=None):
    """
    Standardized progress reporting for the repair phases.

    Args:
        phase_num: Phase number (1 to 4)
        phase_name: Phase name (e.g., "CONVERSATIONAL REPAIR")
        status: Status message ("started", "completed", "skipped", "failed")
        elapsed_time: Time taken to complete (for completion messages)

    Returns:
        The reported message
    """
    prefix = f"PHASE {phase_num}: {phase_name}"
    if status == "completed" and elapsed_time is not None:
        message = f"{prefix} {status.upper()} in {elapsed_time:.2f} seconds"
    else:
        message = f"{prefix} {status.upper()}"

    print("\n" + "=" * 50)
    print(message)
    print("=" * 50)

    if status == "failed":
        logger.error(message)
    else:
        logger.info(message)
    return message


# ------------------- Argument parsing -------------------
def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='JSON config file whose keys mirror the flags')
    common.add_argument('--log-level', help='Logging level (default from config)')

    run = argparse.ArgumentParser(add_help=False)
    run.add_argument('--bug', required=True, help='Path to the bug-spec JSON document')
    run.add_argument('--seed', type=int)
    run.add_argument('--candidates', type=int, help='Mutants generated per failing test')
    run.add_argument('--timeout-secs', type=int, help='Per-test timeout')
    run.add_argument('--workers', type=int, help='Concurrent adapter processes during validation')
    run.add_argument('--text-mutation-rate', type=float)
    run.add_argument('--out', help='Output directory (default results/<bug id>)')

    parser = _Parser(prog='pairfix', description='Conversational program repair with contrastive test pairs')
    commands = parser.add_subparsers(dest='command', required=True)

    repair = commands.add_parser('repair', parents=[common, run], help='Repair one bug')
    repair.add_argument('--provider', choices=['live', 'mock'], default='live')
    repair.add_argument('--mock-script', help='JSON script replayed by the mock provider')
    repair.add_argument('--m', type=int, help='Restarting repairs')
    repair.add_argument('--n', type=int, help='Continuous repairs per restart')
    repair.add_argument('--k', type=int, help='Pairs per prompt')
    repair.add_argument('--theta', type=float, help='Pair similarity threshold')
    repair.add_argument('--augment-budget', type=int, help='Patch augmentation queries')
    repair.add_argument('--selection', choices=PAIR_SELECTIONS, help='Pair selection strategy')
    repair.add_argument('--no-pairs', dest='use_pairs', action='store_const', const=False,
                        help='Show failing tests only, even when pairs exist')
    repair.add_argument('--no-context', dest='use_context', action='store_const', const=False,
                        help='Leave dependent functions out of the prompts')
    repair.set_defaults(handler=cmd_repair)

    gen = commands.add_parser('gen-tests', parents=[common, run], help='Generate and validate mutated tests')
    gen.set_defaults(handler=cmd_gen_tests)

    report = commands.add_parser('report', parents=[common], help='Aggregate report rows')
    report.add_argument('--in', dest='in_dir', required=True, help='Directory holding report_row.json files')
    report.add_argument('--format', choices=['table', 'json'], default='table')
    report.set_defaults(handler=cmd_report)
    return parser


def apply_settings(args):
    """Defaults < environment < config file < command-line flags."""
    Config.apply_environment_overrides()
    if args.config:
        Config.load_file(args.config)
    for dest, key in CLI_KEYS.items():
        value = getattr(args, dest, None)
        if value is not None:
            Config.set_value(key, value)
            logger.info(f'Command-line override: {key} = {value}')


def _out_dir(args, bug):
    out = Path(args.out) if args.out else Path(Config.PATHS['RESULTS']) / bug.id
    out.mkdir(parents=True, exist_ok=True)
    return out


def write_report_row(out, row):
    with open(out / 'report_row.json', 'w', encoding='utf-8') as f:
        json.dump(row, f, indent=2)


# ------------------- Commands -------------------
def make_provider(args):
    if args.provider == 'mock':
        if not args.mock_script:
            raise UsageError('--provider mock requires --mock-script')
        return mock_from_script(args.mock_script)
    return LiveProvider(ProviderConfig.from_config(), Config.api_key())


def cmd_repair(args):
    bug = load_bug_spec(args.bug)
    provider = make_provider(args)
    session = RepairSession(bug, SessionConfig.from_config(), provider, on_phase=report_progress)
    out = _out_dir(args, bug)
    try:
        outcome = session.run()
    except RepairError as e:
        row = session.aborted_outcome().report_row(bug.id)
        row['error'] = f'{type(e).__name__}: {e}'
        write_report_row(out, row)
        raise
    finally:
        with open(out / 'conversation.jsonl', 'w', encoding='utf-8') as f:
            for record in session.state.log:
                f.write(record.to_json() + '\n')

    for number, patch in enumerate(outcome.patches, start=1):
        (out / f'patch_{number}.txt').write_text(patch + '\n', encoding='utf-8')
    write_report_row(out, outcome.report_row(bug.id))

    print(f"\nBug {bug.id}: {outcome.status.value.upper()} "
          f"({outcome.metrics.query_count} queries, {len(outcome.patches)} plausible patches)")
    print(f"Results written to {out}")
    return EXIT_OK if outcome.status is Status.PLAUSIBLE else EXIT_EXHAUSTED


def cmd_gen_tests(args):
    bug = load_bug_spec(args.bug)
    harness = HarnessConfig.from_config()
    mutation = MutationConfig.from_config()
    out = _out_dir(args, bug)

    start_time = time.time()
    report_progress(1, "COLLECT", "started")
    recorded = capture_args(bug, harness)
    fails = run_suite(bug.buggy_source, bug, harness, recorded).failing_cases
    report_progress(1, "COLLECT", "completed", time.time() - start_time)

    targets = [f for f in fails if f.oracle_kind is OracleKind.EXCEPTION]
    if not targets:
        print(f"warning: bug {bug.id} has no exception-oracle failing test; no candidates generated")
        logger.warning(f'No exception-oracle failing tests for {bug.id}')

    start_time = time.time()
    report_progress(2, "TEST AUGMENTATION", "started")
    deadline = time.monotonic() + Config.MUTATION['PHASE_BUDGET_SECS']
    rows = []
    for fail in targets:
        candidates = generate_candidates(fail, mutation)
        for case, verdict in validate_candidates(candidates, bug.buggy_source, bug, harness, deadline):
            rows.append({'failing_id': fail.id, 'candidate_id': case.id,
                         'params': to_envelope(case.params), 'verdict': verdict.kind.value,
                         'delta': delta(fail, case)})
    report_progress(2, "TEST AUGMENTATION", "completed", time.time() - start_time)

    with open(out / 'candidates.jsonl', 'w', encoding='utf-8') as f:
        for row in rows:
            f.write(json.dumps(row, ensure_ascii=False) + '\n')
    passing = [row for row in rows if row['verdict'] == 'pass']
    print(f"\n{len(rows)} candidates validated, {len(passing)} passing")
    if passing:
        print(f"Highest similarity of a passing candidate: {max(row['delta'] for row in passing):.4f}")
    print(f"Candidates written to {out / 'candidates.jsonl'}")
    return EXIT_OK


def cmd_report(args):
    report = build_report(collect_report_rows(args.in_dir))
    if args.format == 'json':
        print(json.dumps(report.to_json(), indent=2))
    else:
        print(report.to_table())
    return EXIT_OK


def main(argv=None):
    """
    Parse arguments, run one command and map its result to an exit code.

    Args:
        argv: Argument list (default sys.argv[1:])

    Returns:
        0, 1 or 2
    """
    parser = build_parser()
    snapshot = Config.snapshot()
    try:
        args = parser.parse_args(argv)
        apply_settings(args)
        setup_logging(args.log_level)
        logger.info(f'Starting command {args.command}')
        return args.handler(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_ERROR
    except (RepairError, ValueError, OSError) as e:
        logger.error(f'{type(e).__name__}: {e}')
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_ERROR
    finally:
        Config.restore(snapshot)


if __name__ == "__main__":
    sys.exit(main())
