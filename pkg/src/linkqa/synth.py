"""Batch QA synthesis against a chat-completions endpoint.

A bounded-concurrency scheduler renders one prompt per discovered pair,
posts it as a single user message, retries transient failures with
exponential backoff, and appends raw completions to a JSONL sink in pair
order. A checkpoint file records the completed prefix so an interrupted
run resumes without re-requesting finished pairs.
"""

from __future__ import annotations

import itertools
import json
import os
import random
import time
from concurrent.futures import Future, ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Protocol

import requests

from .ingest import Document, DocumentStore
from .motifs import MotifPair
from .prompts import (
    render_cross_doc_prompt,
    render_single_doc_prompt,
    render_three_doc_prompt,
)

MODES = ("cross_doc", "single_doc", "three_doc")

ENDPOINT_ENV = "SYNTH_ENDPOINT"
TOKEN_ENV = "SYNTH_TOKEN"

_RETRYABLE_STATUS = {408, 429, 500, 502, 503, 504}


class EndpointError(Exception):
    """Non-retryable endpoint failure (bad request, auth, oversized, ...)."""


class TransientEndpointError(EndpointError):
    """Retryable failure: transport error or retryable HTTP status."""


class SynthesisFailure(Exception):
    """A pair that could not be synthesized; carries the attempt count."""

    def __init__(self, message: str, attempts: int):
        super().__init__(message)
        self.attempts = attempts


@dataclass
class SynthesisParams:
    temperature: float = 0.7
    top_p: float = 0.8
    max_output_tokens: int = 32_768
    model_name: str = "local-model"
    passage_char_limit: int = 50_000
    qa_per_pair: int = 1
    mode: str = "cross_doc"

    def __post_init__(self) -> None:
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not 0 < self.top_p <= 1:
            raise ValueError("top_p must be in (0, 1]")
        if self.passage_char_limit <= 0:
            raise ValueError("passage_char_limit must be positive")
        if self.qa_per_pair < 1:
            raise ValueError("qa_per_pair must be >= 1")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")


@dataclass
class RawCompletion:
    pair: MotifPair
    prompt_chars: int
    completion_text: str
    latency_ms: int
    attempt: int
    endpoint_finish_reason: str
    a_title: str = ""
    b_title: str = ""
    hub_title: str | None = None


@dataclass
class RetryPolicy:
    """Exponential backoff with jitter; sleep and rng injectable for tests."""

    base_delay: float = 1.0
    factor: float = 2.0
    max_attempts: int = 6
    jitter: bool = True
    sleep: Callable[[float], None] = time.sleep
    rng: random.Random = field(default_factory=random.Random)

    def delay(self, attempt: int) -> float:
        d = self.base_delay * (self.factor ** (attempt - 1))
        if self.jitter:
            d *= 0.5 + self.rng.random()
        return d


@dataclass
class SynthesisReport:
    requested: int = 0
    succeeded: int = 0
    failed: int = 0
    skipped: int = 0

    def as_dict(self) -> dict:
        return dict(self.__dict__)


class CompletionClient(Protocol):
    def complete(self, prompt: str, params: SynthesisParams) -> tuple[str, str]:
        """Return (completion_text, finish_reason) for one chat request."""
        ...


class HttpChatClient:
    """Chat-completions client: POST {model, messages, temperature, top_p,
    max_tokens}; reads choices[0].message.content and finish_reason."""

    def __init__(
        self,
        endpoint: str,
        token: str | None = None,
        timeout: float = 300.0,
        session: requests.Session | None = None,
    ):
        self.endpoint = endpoint
        self.token = token
        self.timeout = timeout
        self.session = session or requests.Session()

    @classmethod
    def from_env(cls, **kwargs) -> "HttpChatClient":
        endpoint = os.environ.get(ENDPOINT_ENV)
        if not endpoint:
            raise EndpointError(f"no endpoint configured; set {ENDPOINT_ENV}")
        return cls(endpoint, token=os.environ.get(TOKEN_ENV), **kwargs)

    def complete(self, prompt: str, params: SynthesisParams) -> tuple[str, str]:
        body = {
            "model": params.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": params.temperature,
            "top_p": params.top_p,
            "max_tokens": params.max_output_tokens,
        }
        headers = {}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        try:
            response = self.session.post(
                self.endpoint, json=body, headers=headers, timeout=self.timeout
            )
        except (requests.ConnectionError, requests.Timeout) as exc:
            raise TransientEndpointError(f"transport failure: {exc}") from exc
        if response.status_code in _RETRYABLE_STATUS:
            raise TransientEndpointError(f"endpoint returned {response.status_code}")
        if response.status_code != 200:
            raise EndpointError(
                f"endpoint returned {response.status_code}: {response.text[:200]}"
            )
        try:
            data = response.json()
            choice = data["choices"][0]
            return choice["message"]["content"], choice.get("finish_reason", "")
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise EndpointError(f"malformed endpoint response: {exc}") from exc


def render_prompt(pair: MotifPair, docs: DocumentStore, params: SynthesisParams) -> str:
    """Render the prompt for a pair according to the configured mode."""
    doc_a = docs.get(pair.a)
    if params.mode == "single_doc":
        return render_single_doc_prompt(doc_a, params.passage_char_limit)
    doc_b = docs.get(pair.b)
    if params.mode == "three_doc":
        hub_doc: Document | None = docs.get(pair.hub) if pair.hub is not None else None
        return render_three_doc_prompt(doc_a, doc_b, hub_doc, params.passage_char_limit)
    return render_cross_doc_prompt(doc_a, doc_b, params.passage_char_limit)


def synthesize_pair(
    client: CompletionClient,
    pair: MotifPair,
    docs: DocumentStore,
    params: SynthesisParams,
    retry: RetryPolicy | None = None,
) -> RawCompletion:
    """Request one completion for a pair, retrying transient failures.

    Raises SynthesisFailure when retries are exhausted or the endpoint
    rejects the request outright; precondition violations (unknown doc id,
    empty text, missing hub in three_doc mode) fail immediately.
    """
    if retry is None:
        retry = RetryPolicy()
    try:
        prompt = render_prompt(pair, docs, params)
    except (KeyError, ValueError) as exc:
        raise SynthesisFailure(f"cannot render prompt: {exc}", attempts=0) from exc

    last_error: Exception | None = None
    for attempt in range(1, retry.max_attempts + 1):
        start = time.monotonic()
        try:
            text, finish_reason = client.complete(prompt, params)
        except TransientEndpointError as exc:
            last_error = exc
            if attempt < retry.max_attempts:
                retry.sleep(retry.delay(attempt))
            continue
        except EndpointError as exc:
            raise SynthesisFailure(f"non-retryable: {exc}", attempts=attempt) from exc
        latency_ms = int((time.monotonic() - start) * 1000)
        hub_title = docs.get(pair.hub).title if pair.hub is not None else None
        return RawCompletion(
            pair=pair,
            prompt_chars=len(prompt),
            completion_text=text,
            latency_ms=latency_ms,
            attempt=attempt,
            endpoint_finish_reason=finish_reason,
            a_title=docs.get(pair.a).title,
            b_title=docs.get(pair.b).title,
            hub_title=hub_title,
        )
    raise SynthesisFailure(
        f"retries exhausted: {last_error}", attempts=retry.max_attempts
    )


def pair_order_key(pair: MotifPair) -> str:
    """Stream-order identity of a pair, used for checkpoint consistency."""
    return f"{pair.a}-{pair.b}:{pair.relation}"


@dataclass
class Checkpoint:
    pairs_completed: int = 0
    last_pair_key: str = ""
    output_bytes_written: int = 0

    @classmethod
    def load(cls, path: str) -> "Checkpoint":
        if not os.path.exists(path):
            return cls()
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
        return cls(
            pairs_completed=int(data["pairs_completed"]),
            last_pair_key=str(data["last_pair_key"]),
            output_bytes_written=int(data["output_bytes_written"]),
        )

    def save(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(
                {
                    "pairs_completed": self.pairs_completed,
                    "last_pair_key": self.last_pair_key,
                    "output_bytes_written": self.output_bytes_written,
                },
                fh,
            )
        os.replace(tmp, path)


def completion_record(result: RawCompletion | None, pair: MotifPair, error: str | None,
                      a_title: str = "", b_title: str = "", hub_title: str | None = None) -> dict:
    """JSONL record for one pair: a completion or a recorded failure."""
    if result is not None:
        return {
            "a": pair.a,
            "b": pair.b,
            "hub": pair.hub,
            "relation": pair.relation,
            "a_title": result.a_title,
            "b_title": result.b_title,
            "hub_title": result.hub_title,
            "prompt_chars": result.prompt_chars,
            "completion": result.completion_text,
            "finish_reason": result.endpoint_finish_reason,
            "latency_ms": result.latency_ms,
            "attempt": result.attempt,
            "error": None,
        }
    return {
        "a": pair.a,
        "b": pair.b,
        "hub": pair.hub,
        "relation": pair.relation,
        "a_title": a_title,
        "b_title": b_title,
        "hub_title": hub_title,
        "prompt_chars": 0,
        "completion": None,
        "finish_reason": None,
        "latency_ms": None,
        "attempt": None,
        "error": error,
    }


def run_synthesis(
    pairs: Iterable[MotifPair],
    docs: DocumentStore,
    client: CompletionClient,
    params: SynthesisParams,
    out_path: str,
    checkpoint_path: str,
    *,
    concurrency: int = 16,
    limit: int | None = None,
    retry: RetryPolicy | None = None,
) -> SynthesisReport:
    """Drive synthesis over a pair stream with bounded concurrency.

    At most ``concurrency`` requests are in flight; records are appended in
    input pair order; the checkpoint is updated after every write (well
    within the at-least-every-100 persistence contract). A rerun with the
    same inputs skips the completed prefix. Failed pairs are recorded in
    the output with their last error and do not stop the run.
    """
    if concurrency < 1:
        raise ValueError("concurrency must be >= 1")
    checkpoint = Checkpoint.load(checkpoint_path)
    report = SynthesisReport(skipped=checkpoint.pairs_completed)

    if checkpoint.pairs_completed and not os.path.exists(out_path):
        raise ValueError("checkpoint present but output file is missing")

    # Fail fast on unwritable sink or checkpoint before any request.
    mode = "r+b" if os.path.exists(out_path) else "wb"
    out = open(out_path, mode)
    try:
        checkpoint.save(checkpoint_path)
        out.truncate(checkpoint.output_bytes_written)
        out.seek(checkpoint.output_bytes_written)

        stream: Iterator[MotifPair] = iter(pairs)
        for _ in range(checkpoint.pairs_completed):
            try:
                skipped_pair = next(stream)
            except StopIteration:
                raise ValueError(
                    "checkpoint records more pairs than the input stream holds"
                ) from None
        if checkpoint.pairs_completed and checkpoint.last_pair_key:
            if pair_order_key(skipped_pair) != checkpoint.last_pair_key:
                raise ValueError(
                    "checkpoint does not match the input stream "
                    f"(expected last key {checkpoint.last_pair_key}, "
                    f"found {pair_order_key(skipped_pair)})"
                )
        if limit is not None:
            stream = itertools.islice(stream, limit)

        def title_of(doc_id: int | None) -> str | None:
            try:
                return docs.get(doc_id).title if doc_id is not None else None
            except KeyError:
                return None

        def work(pair: MotifPair) -> tuple[MotifPair, RawCompletion | None, str | None]:
            try:
                result = synthesize_pair(client, pair, docs, params, retry=retry)
                return pair, result, None
            except SynthesisFailure as exc:
                return pair, None, str(exc)

        def drain_one(window: list[Future]) -> None:
            """Wait for the oldest in-flight pair, write its record, checkpoint."""
            pair, result, error = window.pop(0).result()
            record = completion_record(
                result,
                pair,
                error,
                a_title=title_of(pair.a) or "",
                b_title=title_of(pair.b) or "",
                hub_title=title_of(pair.hub),
            )
            out.write(json.dumps(record, ensure_ascii=False).encode("utf-8"))
            out.write(b"\n")
            out.flush()
            report.succeeded += 1 if error is None else 0
            report.failed += 1 if error is not None else 0
            checkpoint.pairs_completed += 1
            checkpoint.last_pair_key = pair_order_key(pair)
            checkpoint.output_bytes_written = out.tell()
            checkpoint.save(checkpoint_path)

        executor = ThreadPoolExecutor(max_workers=concurrency)
        window: list[Future] = []
        try:
            for pair in stream:
                if len(window) >= concurrency:
                    drain_one(window)
                window.append(executor.submit(work, pair))
                report.requested += 1
            while window:
                drain_one(window)
        finally:
            executor.shutdown(wait=False, cancel_futures=True)
            checkpoint.save(checkpoint_path)
    finally:
        out.close()
    return report


def read_raw_completions(path: str) -> Iterator[dict]:
    """Stream raw completion records (including recorded failures)."""
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)
