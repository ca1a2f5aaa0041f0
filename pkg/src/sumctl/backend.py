"""Summary-generation backends.

Two interchangeable implementations sit behind one ``generate(request,
graph)`` call: a chat-completions-style HTTP client for a remote model,
and a deterministic offline surrogate that extracts sentences while
honoring the prompt's sentence-count and keyword directives. The
surrogate keeps every experiment hermetic and reproducible.
"""

from __future__ import annotations

import math
import os
import time
from dataclasses import dataclass
from typing import Protocol

import requests

from .errors import ConfigurationError, GenerationError, RequestError, TransportError, ValidationError
from .prompt import Prompt, PromptConfig
from .semgraph import NodeKind, SemanticGraph
from .textproc import split_sentences

API_KEY_ENV = "SUMCTL_API_KEY"
RETRY_STATUSES = frozenset({429, 500, 502, 503, 504})
BACKOFF_SECONDS = (1.0, 2.0, 4.0)

_sleep = time.sleep  # patchable in tests


@dataclass(frozen=True)
class GenerationRequest:
    prompt: Prompt
    source_text: str
    max_output_tokens: int = 256
    temperature: float = 0.0

    def __post_init__(self):
        if self.max_output_tokens < 1:
            raise ValidationError("max_output_tokens must be >= 1")
        if self.temperature < 0:
            raise ValidationError("temperature must be >= 0")


@dataclass(frozen=True)
class GeneratedSummary:
    text: str
    backend_id: str
    prompt_config: PromptConfig
    latency_ms: int


class SummaryBackend(Protocol):
    backend_id: str

    def generate(self, request: GenerationRequest, graph: SemanticGraph | None = None) -> GeneratedSummary:
        ...


def _elapsed_ms(start: float) -> int:
    return math.ceil((time.perf_counter() - start) * 1000)


def generate_http(
    request: GenerationRequest,
    base_url: str,
    model: str,
    api_key: str | None = None,
    timeout: float = 30.0,
) -> GeneratedSummary:
    """Call a chat-completions endpoint: system message = prompt text,
    user message = source text.

    Transient failures (HTTP 429/5xx and connection errors) retry up to 3
    times with 1s/2s/4s backoff. The API key comes from ``SUMCTL_API_KEY``
    unless passed explicitly; a missing key fails before any network call.
    """
    key = api_key or os.environ.get(API_KEY_ENV)
    if not key:
        raise ConfigurationError(
            f"no API key: set the {API_KEY_ENV} environment variable or pass api_key"
        )
    url = base_url.rstrip("/") + "/chat/completions"
    body = {
        "model": model,
        "messages": [
            {"role": "system", "content": request.prompt.text},
            {"role": "user", "content": request.source_text},
        ],
        "temperature": request.temperature,
        "max_tokens": request.max_output_tokens,
    }
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}

    start = time.perf_counter()
    attempts = len(BACKOFF_SECONDS) + 1
    for attempt in range(attempts):
        try:
            response = requests.post(url, json=body, headers=headers, timeout=timeout)
        except requests.RequestException as exc:
            if attempt < len(BACKOFF_SECONDS):
                _sleep(BACKOFF_SECONDS[attempt])
                continue
            raise TransportError(f"request to {url} failed after {attempts} attempts: {exc}")
        if response.status_code in RETRY_STATUSES:
            if attempt < len(BACKOFF_SECONDS):
                _sleep(BACKOFF_SECONDS[attempt])
                continue
            raise TransportError(
                f"retries exhausted after {attempts} attempts; last status {response.status_code}"
            )
        if response.status_code != 200:
            raise RequestError(
                f"request failed with status {response.status_code}",
                status=response.status_code,
                body=response.text,
            )
        try:
            text = response.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RequestError(
                f"malformed completion body: {exc}", status=200, body=response.text
            )
        if not text:
            raise GenerationError("backend returned an empty completion")
        return GeneratedSummary(
            text=text,
            backend_id=f"http:{model}",
            prompt_config=request.prompt.config,
            latency_ms=_elapsed_ms(start),
        )
    raise TransportError("unreachable")  # pragma: no cover


def generate_surrogate(request: GenerationRequest, graph: SemanticGraph) -> GeneratedSummary:
    """Deterministic extractive stand-in for a remote model.

    Honors the prompt's directives: picks the ``target_sentences`` highest
    scoring sentences, where a sentence scores the salience sum of its
    content nodes that appear in the prompt's keyword list plus 0.1 times
    its own sentence-node salience. With no keywords it falls back to the
    leading sentences. Output preserves document order; ties prefer the
    earlier sentence.
    """
    start = time.perf_counter()
    sentences = split_sentences(request.source_text)
    if not sentences:
        raise GenerationError("source text has no sentences")

    wanted = max(1, request.prompt.target_sentences)
    count = min(wanted, len(sentences))
    keywords = set(request.prompt.keywords)

    if not keywords:
        chosen = list(range(count))
    else:
        sentence_node: dict[int, int] = {}
        order = 0
        for i, node in enumerate(graph.nodes):
            if node.kind is NodeKind.SENTENCE:
                sentence_node[i] = order
                order += 1
        scores = [0.0] * len(sentences)
        for i, j, _ in graph.edges:
            if i in sentence_node and j in sentence_node:
                continue
            if j in sentence_node:
                content, sent = i, sentence_node[j]
            elif i in sentence_node:
                content, sent = j, sentence_node[i]
            else:
                continue
            if sent >= len(sentences):
                continue
            if graph.nodes[content].surface in keywords:
                scores[sent] += graph.nodes[content].salience
        for node_index, sent in sentence_node.items():
            if sent < len(sentences):
                scores[sent] += 0.1 * graph.nodes[node_index].salience
        ranked = sorted(range(len(sentences)), key=lambda s: (-scores[s], s))
        chosen = sorted(ranked[:count])

    text = " ".join(sentences[s].text for s in chosen)
    return GeneratedSummary(
        text=text,
        backend_id="surrogate",
        prompt_config=request.prompt.config,
        latency_ms=_elapsed_ms(start),
    )


@dataclass
class SurrogateBackend:
    """Offline extractive backend; requires the document's graph."""

    backend_id: str = "surrogate"

    def generate(self, request: GenerationRequest, graph: SemanticGraph | None = None) -> GeneratedSummary:
        if graph is None:
            raise ValidationError("the surrogate backend needs the document's semantic graph")
        return generate_surrogate(request, graph)


@dataclass
class HttpBackend:
    """Remote chat-completions backend."""

    base_url: str
    model: str
    api_key: str | None = None
    timeout: float = 30.0

    @property
    def backend_id(self) -> str:
        return f"http:{self.model}"

    def generate(self, request: GenerationRequest, graph: SemanticGraph | None = None) -> GeneratedSummary:
        return generate_http(request, self.base_url, self.model, self.api_key, self.timeout)
