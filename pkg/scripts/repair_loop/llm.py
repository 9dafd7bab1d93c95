"""
Chat-completion providers.

CompletionProvider implements the retry policy and the query accounting;
LiveProvider talks to an HTTP chat-completion endpoint, MockProvider replays a
JSON script for tests and desk runs.
"""

import json
import logging
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Tuple

import requests

from ..config import Config
from ..errors import (MalformedResponse, RateLimited, ScriptMismatch,
                      TransientFailure, TransportError)

logger = logging.getLogger(__name__)

ROLES = ('system', 'user', 'assistant')


@dataclass(frozen=True)
class Message:
    role: str
    content: str


@dataclass(frozen=True)
class CompletionRequest:
    model: str
    messages: Tuple[Message, ...]
    temperature: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, 'messages', tuple(self.messages))
        if not self.messages:
            raise ValueError('A completion request needs at least one message')
        if self.messages[0].role != 'system':
            raise ValueError(f'First message must be the system message, got {self.messages[0].role!r}')
        for message in self.messages:
            if message.role not in ROLES:
                raise ValueError(f'Unknown message role {message.role!r}')

    @classmethod
    def from_prompt(cls, prompt, model: str, temperature: float = 1.0):
        """Single-turn request from a RepairPrompt."""
        return cls(model, (Message('system', prompt.system_text), Message('user', prompt.user_text)),
                   temperature)

    @property
    def prompt_text(self) -> str:
        return '\n\n'.join(message.content for message in self.messages)

    def to_payload(self) -> dict:
        return {'model': self.model,
                'messages': [{'role': m.role, 'content': m.content} for m in self.messages],
                'temperature': self.temperature}


@dataclass
class ProviderStats:
    query_count: int = 0
    retry_count: int = 0


@dataclass(frozen=True)
class ProviderConfig:
    url: str
    model: str
    temperature: float = 1.0
    request_timeout_secs: float = 120
    backoff_secs: Tuple[float, ...] = (1, 2, 4)

    def __post_init__(self):
        if not self.model:
            raise ValueError('model must be non-empty')
        if not 0 <= self.temperature <= 2:
            raise ValueError(f'temperature must be in [0, 2], got {self.temperature}')
        if self.request_timeout_secs <= 0:
            raise ValueError(f'request_timeout_secs must be positive, got {self.request_timeout_secs}')

    @classmethod
    def from_config(cls, **overrides):
        p = Config.PROVIDER
        settings = dict(url=p['URL'], model=p['MODEL'], temperature=p['TEMPERATURE'],
                        request_timeout_secs=p['REQUEST_TIMEOUT_SECS'],
                        backoff_secs=tuple(p['BACKOFF_SECS']))
        settings.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**settings)


class CompletionProvider:
    """
    Base provider: one logical completion is one attempt chain.

    A transient failure is retried after each backoff delay in turn; the
    chain counts as one query whether it succeeds or finally fails.
    """

    def __init__(self, backoff_secs: Sequence[float] = (1, 2, 4),
                 sleep: Callable[[float], None] = time.sleep):
        self.backoff_secs = tuple(backoff_secs)
        self.sleep = sleep
        self.stats = ProviderStats()
        self._lock = threading.Lock()

    def _send(self, request: CompletionRequest) -> str:
        raise NotImplementedError

    def complete(self, request: CompletionRequest) -> str:
        attempt = 0
        try:
            while True:
                try:
                    return self._send(request)
                except TransientFailure as e:
                    if attempt >= len(self.backoff_secs):
                        raise TransportError(f'Completion failed after {attempt + 1} attempts: {e}') from e
                    delay = self.backoff_secs[attempt]
                    attempt += 1
                    with self._lock:
                        self.stats.retry_count += 1
                    logger.warning(f'Transient provider failure ({e}); retry {attempt} in {delay}s')
                    self.sleep(delay)
        finally:
            with self._lock:
                self.stats.query_count += 1


class LiveProvider(CompletionProvider):
    """HTTP chat-completion backend: POST {model, messages, temperature}, read choices[0]."""

    def __init__(self, cfg: ProviderConfig, api_key: str, session: Optional[requests.Session] = None,
                 sleep: Callable[[float], None] = time.sleep):
        super().__init__(cfg.backoff_secs, sleep)
        if not api_key:
            raise TransportError(f"Live provider needs the {Config.ENV['API_KEY']} credential")
        self.cfg = cfg
        self.api_key = api_key
        self.session = session or requests.Session()

    def _send(self, request: CompletionRequest) -> str:
        try:
            response = self.session.post(self.cfg.url, json=request.to_payload(),
                                         headers={'Authorization': f'Bearer {self.api_key}'},
                                         timeout=self.cfg.request_timeout_secs)
        except (requests.ConnectionError, requests.Timeout) as e:
            raise TransientFailure(f'{type(e).__name__}: {e}') from e
        except requests.RequestException as e:
            raise TransportError(f'Request to {self.cfg.url} failed: {e}') from e

        if response.status_code == 429:
            raise RateLimited('HTTP 429 from provider')
        if response.status_code >= 500:
            raise TransientFailure(f'HTTP {response.status_code} from provider')
        if response.status_code != 200:
            raise TransportError(f'HTTP {response.status_code} from provider: {response.text[:200]}')

        try:
            content = response.json()['choices'][0]['message']['content']
        except (ValueError, KeyError, IndexError, TypeError) as e:
            raise MalformedResponse(f'No message content in provider response: {response.text[:200]}') from e
        if not isinstance(content, str):
            raise MalformedResponse(f'Message content is not text: {content!r}')
        return content


class MockProvider(CompletionProvider):
    """
    Replays a script of canned responses in order.

    Entries are {"response": text} with an optional "match" substring the
    prompt must contain, or {"fail": true} to simulate a transient failure.
    """

    def __init__(self, script: Sequence[dict], backoff_secs: Sequence[float] = (1, 2, 4),
                 sleep: Callable[[float], None] = time.sleep):
        super().__init__(backoff_secs, sleep)
        for number, entry in enumerate(script, start=1):
            if not isinstance(entry, dict) or not (entry.get('fail') or isinstance(entry.get('response'), str)):
                raise ValueError(f'Script entry {number} needs a "response" text or "fail": true')
        self.script = list(script)
        self.position = 0
        self.prompts = []

    @property
    def remaining(self) -> int:
        return len(self.script) - self.position

    def complete(self, request: CompletionRequest) -> str:
        # an exhausted script is not a query
        if self.remaining <= 0:
            raise TransportError('script exhausted')
        return super().complete(request)

    def _send(self, request: CompletionRequest) -> str:
        if self.remaining <= 0:
            raise TransportError('script exhausted')
        entry = self.script[self.position]
        self.position += 1
        self.prompts.append(request.prompt_text)
        if entry.get('fail'):
            raise TransientFailure(f'scripted failure at entry {self.position}')
        match = entry.get('match')
        if match is not None and match not in request.prompt_text:
            raise ScriptMismatch(f'Script entry {self.position} expects the prompt to contain {match!r}')
        return entry['response']


def mock_from_script(path, sleep: Callable[[float], None] = time.sleep) -> MockProvider:
    """Load a JSON-array script file into a MockProvider."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f'{path} does not exist')
    with open(path, 'r', encoding='utf-8') as f:
        try:
            script = json.load(f)
        except json.JSONDecodeError as e:
            raise ValueError(f'Invalid JSON in mock script: {path}') from e
    if not isinstance(script, list):
        raise ValueError(f'Mock script {path} must be a JSON array')
    return MockProvider(script, tuple(Config.PROVIDER['BACKOFF_SECS']), sleep)
