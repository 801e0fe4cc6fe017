"""Chat-completion transports and response sampling.

Three transports share one ``send(request) -> str`` method:

* :class:`HttpTransport` posts to ``{base_url}/chat/completions``.
* :class:`ReplayTransport` serves ``response_NNNN.txt`` fixtures in order.
* :class:`RecordTransport` wraps another transport and writes every response
  it sees as a fixture, so a recorded session can later be replayed.
"""
from __future__ import annotations

import json
import logging
import os
import re
import threading
import time
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Callable, Iterable, Protocol, Sequence

from .config import HyperparameterConfig, parse_config
from .exceptions import (
    AuthMissing,
    EndpointError,
    LlmHpoError,
    NoJsonFound,
    ReplayExhausted,
    ValidationError,
)
from .prompting import Message, PromptSpec, render_usecase_prompt

log = logging.getLogger(__name__)

API_KEY_ENV = "LLMHPO_API_KEY"
API_URL_ENV = "LLMHPO_API_URL"
DEFAULT_MODEL = "gpt-4"
FIXTURE_PATTERN = "response_{:04d}.txt"
RETRY_DELAYS = (1.0, 2.0, 4.0)


@dataclass(frozen=True)
class ChatRequest:
    messages: Sequence[Message]
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0

    def __post_init__(self):
        if not self.messages:
            raise ValidationError("chat request needs at least one message")
        if not (isinstance(self.temperature, (int, float)) and self.temperature >= 0):
            raise ValidationError(f"temperature must be >= 0, got {self.temperature!r}")

    def to_payload(self) -> dict:
        return {
            "model": self.model_name,
            "temperature": self.temperature,
            "messages": [m.to_dict() for m in self.messages],
        }


class Transport(Protocol):
    def send(self, request: ChatRequest) -> str: ...


def _transient(status: int) -> bool:
    return status == 429 or 500 <= status < 600


class HttpTransport:
    """Chat-completion client over plain HTTP with bearer-token auth.

    Transient failures (HTTP 429, 5xx, unreachable host) are retried
    ``len(retry_delays)`` times, sleeping the given delays in between.
    """

    def __init__(
        self,
        base_url: str | None,
        api_key: str | None,
        *,
        timeout: float = 120.0,
        retry_delays: Sequence[float] = RETRY_DELAYS,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self.base_url = base_url
        self.api_key = api_key
        self.timeout = timeout
        self.retry_delays = tuple(retry_delays)
        self.sleep = sleep

    @classmethod
    def from_env(cls, environ=None, **kwargs) -> "HttpTransport":
        environ = os.environ if environ is None else environ
        return cls(environ.get(API_URL_ENV), environ.get(API_KEY_ENV), **kwargs)

    def check(self) -> None:
        if not self.api_key:
            raise AuthMissing()
        if not self.base_url:
            raise ValidationError(f"{API_URL_ENV} is not set; the HTTP transport is unavailable")

    def _post(self, body: bytes) -> tuple[int, bytes]:
        req = urllib.request.Request(
            self.base_url.rstrip("/") + "/chat/completions",
            data=body,
            method="POST",
            headers={
                "Content-Type": "application/json",
                "Authorization": f"Bearer {self.api_key}",
            },
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                return resp.status, resp.read()
        except urllib.error.HTTPError as exc:
            return exc.code, exc.read()

    def send(self, request: ChatRequest) -> str:
        self.check()
        body = json.dumps(request.to_payload()).encode("utf-8")
        attempt = 0
        while True:
            try:
                status, payload = self._post(body)
            except urllib.error.URLError as exc:
                status, payload, err = None, b"", str(exc.reason)
            else:
                err = payload[:200].decode("utf-8", "replace")
            if status is not None and 200 <= status < 300:
                break
            if (status is None or _transient(status)) and attempt < len(self.retry_delays):
                delay = self.retry_delays[attempt]
                log.warning("chat endpoint status %s, retrying in %.0fs", status, delay)
                self.sleep(delay)
                attempt += 1
                continue
            raise EndpointError(status, err)
        try:
            return json.loads(payload)["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError):
            raise EndpointError(status, "response body is not a chat completion") from None


class ReplayTransport:
    """Returns fixture ``k`` on the ``k``-th call; thread-safe."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)
        if not self.directory.is_dir():
            raise ValidationError(f"replay directory {self.directory} does not exist")
        self.files = sorted(self.directory.glob("response_*.txt"))
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, request: ChatRequest) -> str:
        with self._lock:
            k = self.calls
            self.calls += 1
            if k >= len(self.files):
                raise ReplayExhausted(k, len(self.files))
            with open(self.files[k], encoding="utf-8", newline="") as fh:
                return fh.read()


class RecordTransport:
    """Forwards to ``inner`` and stores each response as the next fixture."""

    def __init__(self, inner: Transport, directory: str | Path):
        self.inner = inner
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self.calls = 0
        self._lock = threading.Lock()

    def send(self, request: ChatRequest) -> str:
        with self._lock:
            k = self.calls
            self.calls += 1
        text = self.inner.send(request)
        path = self.directory / FIXTURE_PATTERN.format(k)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        return text


def write_fixtures(directory: str | Path, responses: Iterable[str]) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for k, text in enumerate(responses):
        path = directory / FIXTURE_PATTERN.format(k)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        paths.append(path)
    return paths


def send_chat(transport: Transport, request: ChatRequest) -> str:
    return transport.send(request)


# -- JSON extraction ---------------------------------------------------------

_FENCE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def _balanced_object(text: str) -> str | None:
    start = text.find("{")
    while start != -1:
        depth = 0
        in_string = escaped = False
        for i in range(start, len(text)):
            ch = text[i]
            if in_string:
                if escaped:
                    escaped = False
                elif ch == "\\":
                    escaped = True
                elif ch == '"':
                    in_string = False
            elif ch == '"':
                in_string = True
            elif ch == "{":
                depth += 1
            elif ch == "}":
                depth -= 1
                if depth == 0:
                    return text[start : i + 1]
        start = text.find("{", start + 1)
    return None


def extract_json_block(raw: str) -> str:
    """First balanced ``{...}`` block, looking inside fenced code first."""
    for m in _FENCE.finditer(raw):
        block = _balanced_object(m.group(1))
        if block is not None:
            return block
    block = _balanced_object(raw)
    if block is None:
        raise NoJsonFound()
    return block


# -- sampling ----------------------------------------------------------------


@dataclass(frozen=True)
class ParseFailure:
    code: str
    message: str

    def to_dict(self) -> dict:
        return {"code": self.code, "message": self.message}


@dataclass(frozen=True)
class Sample:
    index: int
    raw: str | None
    config: HyperparameterConfig | None = None
    failure: ParseFailure | None = None
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.config is not None

    def to_dict(self) -> dict:
        return {
            "type": "sample",
            "index": self.index,
            "raw": self.raw,
            "config": self.config.to_dict() if self.config else None,
            "failure": self.failure.to_dict() if self.failure else None,
            "warnings": list(self.warnings),
        }


@dataclass
class SampleBatch:
    """Responses to ``n`` identical single-turn conversations, by iteration."""

    samples: list[Sample]
    messages: list[Message] | None = None
    model_name: str = DEFAULT_MODEL
    temperature: float = 0.0

    def __post_init__(self):
        if [s.index for s in self.samples] != list(range(len(self.samples))):
            raise ValidationError("sample indices must be 0..n-1 in order")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def configs(self) -> list[HyperparameterConfig]:
        return [s.config for s in self.samples if s.config is not None]

    @property
    def failures(self) -> list[Sample]:
        return [s for s in self.samples if s.config is None]

    def header(self) -> dict:
        return {
            "type": "header",
            "model": self.model_name,
            "temperature": self.temperature,
            "n": len(self.samples),
            "messages": [m.to_dict() for m in self.messages] if self.messages else None,
        }

    def to_jsonl(self) -> str:
        lines = [json.dumps(self.header())]
        lines += [json.dumps(s.to_dict()) for s in self.samples]
        return "\n".join(lines) + "\n"

    def write(self, target: str | Path | IO[str]) -> None:
        text = self.to_jsonl()
        if hasattr(target, "write"):
            target.write(text)
        else:
            with open(target, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)

    @classmethod
    def from_jsonl(cls, text: str) -> "SampleBatch":
        header: dict = {}
        samples = []
        for lineno, line in enumerate(text.splitlines(), 1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"line {lineno}: not valid JSON: {exc}") from None
            kind = obj.get("type", "sample")
            if kind == "header":
                header = obj
                continue
            config = parse_config(obj["config"], unknown=[]) if obj.get("config") else None
            failure = ParseFailure(**obj["failure"]) if obj.get("failure") else None
            samples.append(
                Sample(obj["index"], obj.get("raw"), config, failure, tuple(obj.get("warnings", ())))
            )
        messages = header.get("messages")
        return cls(
            samples,
            [Message(**m) for m in messages] if messages else None,
            header.get("model", DEFAULT_MODEL),
            header.get("temperature", 0.0),
        )

    @classmethod
    def read(cls, path: str | Path) -> "SampleBatch":
        with open(path, encoding="utf-8", newline="") as fh:
            return cls.from_jsonl(fh.read())


def _parse_response(index: int, raw: str) -> Sample:
    notes: list[str] = []
    try:
        config = parse_config(extract_json_block(raw), unknown=notes)
    except ValidationError as exc:
        return Sample(index, raw, None, ParseFailure(exc.code, str(exc)))
    return Sample(index, raw, config, None, tuple(notes))


def collect_samples(
    transport: Transport,
    spec: PromptSpec,
    n: int,
    *,
    model_name: str = DEFAULT_MODEL,
    temperature: float = 0.0,
    parallel: int = 1,
) -> SampleBatch:
    """Ask the same use-case prompt ``n`` times in fresh conversations.

    Unparseable responses and non-fatal transport errors become
    :class:`ParseFailure` entries; only :class:`AuthMissing` aborts.
    """
    if not isinstance(n, int) or n < 1:
        raise ValidationError(f"n must be a positive integer, got {n!r}")
    if parallel < 1:
        raise ValidationError(f"parallel must be >= 1, got {parallel!r}")
    messages = render_usecase_prompt(spec)
    request = ChatRequest(messages, model_name, temperature)

    def one(i: int) -> Sample:
        try:
            raw = send_chat(transport, request)
        except AuthMissing:
            raise
        except LlmHpoError as exc:
            return Sample(i, None, None, ParseFailure(exc.code, str(exc)))
        return _parse_response(i, raw)

    if parallel == 1:
        samples = [one(i) for i in range(n)]
    else:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            samples = list(pool.map(one, range(n)))
    return SampleBatch(samples, messages, model_name, temperature)


def ask_for_json(transport: Transport, messages: Sequence[Message], **request_kw) -> str:
    """Single round trip returning the JSON block of the answer."""
    raw = send_chat(transport, ChatRequest(list(messages), **request_kw))
    return extract_json_block(raw)
