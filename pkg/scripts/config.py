"""
Pairfix - Centralized Configuration

This module contains all default parameters for the repair pipeline. The typed
configuration objects of each stage are built from these dictionaries.
"""
import copy
import os
import json
import logging
from pathlib import Path

logger = logging.getLogger(__name__)

PAIR_SELECTIONS = ('similarity', 'random')


def _flag(value):
    """Boolean from JSON, a command-line switch or an environment string."""
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in ('true', '1', 'yes', 'on'):
        return True
    if text in ('false', '0', 'no', 'off'):
        return False
    raise ValueError(f'not a boolean: {value!r}')


def _selection(value):
    if value not in PAIR_SELECTIONS:
        raise ValueError(f'selection must be one of {PAIR_SELECTIONS}, got {value!r}')
    return value


class Config:
    """Global configuration parameters for the repair pipeline."""
    PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

    MUTATION = {'CANDIDATE_COUNT': 1000, 'EDIT_BUDGET_FRACTION': 0.10,
        'NUMERIC_DELTA_MAX': 3, 'SCALE_RANGE': (0.5, 2.0),
        'MAGNITUDE_PERCENT_RANGE': (1.0, 10.0), 'MAX_PARAMS': 1, 'SEED': 0,
        'TEXT_MUTATION_RATE': 0.0, 'STALE_ATTEMPT_LIMIT': 2000,
        'PHASE_BUDGET_SECS': 25 * 60}
    PAIRING = {'THETA': 0.5, 'K': 2, 'SELECTION': 'similarity',
        'USE_PAIRS': True}
    REPAIR_BUDGET = {'M': 40, 'N': 3, 'AUGMENT_BUDGET': 40}
    HARNESS = {'TIMEOUT_SECS': 30, 'GRACE_SECS': 2, 'WORKERS': 4}
    PROVIDER = {'URL': 'https://api.openai.com/v1/chat/completions',
        'MODEL': 'gpt-3.5-turbo', 'TEMPERATURE': 1.0,
        'REQUEST_TIMEOUT_SECS': 120, 'BACKOFF_SECS': (1, 2, 4)}
    PROMPT = {'CHAR_BUDGET': 12000, 'MIN_CHAR_BUDGET': 2000,
        'DEPENDENT_CHAR_BUDGET': 4000, 'USE_CONTEXT': True}
    PATHS = {'TEMPLATES': os.path.join(PROJECT_ROOT, 'templates'), 'LOGS':
        os.path.join(PROJECT_ROOT, 'logs'), 'RESULTS': os.path.join(
        PROJECT_ROOT, 'results')}
    LOGGING = {'LEVEL': 'INFO', 'FILENAME': 'pairfix.log', 'FORMAT':
        '%(asctime)s; %(levelname)s; %(message)s', 'DATEFMT':
        '%Y-%m-%d %H:%M:%S'}
    ENV = {'API_KEY': 'CONTRAST_REPAIR_API_KEY', 'PREFIX': 'CONTRAST_REPAIR_'}

    # config-file key -> (section, entry, converter)
    FILE_KEYS = {'m': ('REPAIR_BUDGET', 'M', int), 'n': ('REPAIR_BUDGET',
        'N', int), 'augment_budget': ('REPAIR_BUDGET', 'AUGMENT_BUDGET', int),
        'k': ('PAIRING', 'K', int), 'theta': ('PAIRING', 'THETA', float),
        'seed': ('MUTATION', 'SEED', int), 'candidates': ('MUTATION',
        'CANDIDATE_COUNT', int), 'text_mutation_rate': ('MUTATION',
        'TEXT_MUTATION_RATE', float), 'timeout_secs': ('HARNESS',
        'TIMEOUT_SECS', int), 'workers': ('HARNESS', 'WORKERS', int),
        'provider.url': ('PROVIDER', 'URL', str), 'provider.model': (
        'PROVIDER', 'MODEL', str), 'provider.temperature': ('PROVIDER',
        'TEMPERATURE', float), 'selection': ('PAIRING', 'SELECTION',
        _selection), 'use_pairs': ('PAIRING', 'USE_PAIRS', _flag),
        'use_context': ('PROMPT', 'USE_CONTEXT', _flag)}

    @classmethod
    def set_value(cls, key, value):
        """Set one entry addressed by its config-file key (e.g. 'provider.url')."""
        if key not in cls.FILE_KEYS:
            raise ValueError(f'Unknown configuration key: {key}')
        section, entry, convert = cls.FILE_KEYS[key]
        try:
            getattr(cls, section)[entry] = convert(value)
        except (TypeError, ValueError) as e:
            raise ValueError(f'Invalid value for {key}: {value!r}') from e

    @classmethod
    def load_file(cls, path):
        """
        Apply a JSON configuration file whose keys mirror the CLI flags.

        Args:
            path: Path to the JSON document

        Returns:
            Dictionary of the applied settings
        """
        path = Path(path)
        if not path.exists():
            raise FileNotFoundError(f'{path} does not exist')
        with open(path, 'r', encoding='utf-8') as f:
            try:
                settings = json.load(f)
            except json.JSONDecodeError as e:
                raise ValueError(f'Invalid JSON in config file: {path}') from e
        if not isinstance(settings, dict):
            raise ValueError(f'Config file {path} must hold a JSON object')
        for key, value in settings.items():
            cls.set_value(key, value)
            logger.info(f'Config file override: {key} = {value}')
        return settings

    @classmethod
    def apply_environment_overrides(cls, environ=None):
        """Apply CONTRAST_REPAIR_* environment variable overrides."""
        environ = os.environ if environ is None else environ
        prefix = cls.ENV['PREFIX']
        overrides = {'PROVIDER_URL': 'provider.url', 'PROVIDER_MODEL':
            'provider.model', 'TIMEOUT_SECS': 'timeout_secs', 'WORKERS':
            'workers', 'SELECTION': 'selection', 'USE_PAIRS': 'use_pairs',
            'USE_CONTEXT': 'use_context'}
        for suffix, key in overrides.items():
            if prefix + suffix in environ:
                cls.set_value(key, environ[prefix + suffix])
                logger.info(
                    f'Environment override: {key} = {environ[prefix + suffix]}'
                    )
        if prefix + 'LOG_LEVEL' in environ:
            cls.LOGGING['LEVEL'] = environ[prefix + 'LOG_LEVEL'].upper()
            logger.info(f"Environment override: LOG_LEVEL = {cls.LOGGING['LEVEL']}")

    @classmethod
    def snapshot(cls):
        """Return a deep copy of all mutable sections, for later restore."""
        return {name: copy.deepcopy(getattr(cls, name)) for name in ('MUTATION',
            'PAIRING', 'REPAIR_BUDGET', 'HARNESS', 'PROVIDER', 'PROMPT',
            'LOGGING')}

    @classmethod
    def restore(cls, snapshot):
        for name, value in snapshot.items():
            setattr(cls, name, value)

    @classmethod
    def api_key(cls, environ=None):
        """Return the provider credential from the environment, or None."""
        environ = os.environ if environ is None else environ
        return environ.get(cls.ENV['API_KEY'])
