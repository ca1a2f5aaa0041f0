"""Deterministic text preprocessing: tokenization, sentence splitting,
rule-based entity mentions, and TF-IDF term weighting.

Everything here is pure and dependency-free so that downstream stages
(graph construction, metrics, the extractive backend) are reproducible
byte for byte.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .errors import ValidationError


@dataclass(frozen=True)
class Token:
    """A single token with its surface form, normalized form, and source span.

    ``normalized`` is the lowercased alphanumeric core of the surface
    ("U.S." -> "us", "3%" core "3" -> "3"); it is empty exactly for
    pure-punctuation tokens. ``span`` is a (start, end) index pair into
    the source string.
    """

    surface: str
    normalized: str
    span: tuple[int, int]


@dataclass(frozen=True)
class Sentence:
    index: int
    tokens: tuple[Token, ...]
    span: tuple[int, int]
    text: str


class EntityKind(str, Enum):
    CAPITALIZED_SPAN = "capitalized_span"
    ACRONYM = "acronym"
    NUMBER_UNIT = "number_unit"


@dataclass(frozen=True)
class EntityMention:
    surface: str
    sentence_index: int
    kind: EntityKind


# Abbreviations that never terminate a sentence even when followed by
# whitespace and a capital letter.
DEFAULT_ABBREVIATIONS = frozenset(
    {
        "mr.", "mrs.", "ms.", "dr.", "prof.", "sr.", "jr.", "st.",
        "u.s.", "u.k.", "u.n.", "e.g.", "i.e.", "etc.", "vs.", "cf.",
        "no.", "fig.", "eq.", "al.", "inc.", "ltd.", "co.",
    }
)

# Words that turn a preceding number into a number_unit mention.
DEFAULT_UNIT_WORDS = frozenset(
    {
        "percent", "points", "dollars", "euros", "pounds", "cents",
        "kilometers", "km", "miles", "meters", "feet", "kg", "kilograms",
        "grams", "tons", "tonnes", "litres", "liters", "degrees",
        "years", "months", "weeks", "days", "hours", "minutes", "seconds",
        "people", "workers", "employees", "residents", "patients",
        "participants", "respondents", "samples", "cases", "votes", "seats",
        "million", "billion", "trillion", "thousand",
    }
)

_SENTENCE_TERMINATORS = ".!?"


def _is_punct_char(ch: str) -> bool:
    return not ch.isalnum()


def _normalize(surface: str) -> str:
    return "".join(ch for ch in surface.lower() if ch.isalnum())


def _token(text: str, start: int, end: int) -> Token:
    surface = text[start:end]
    return Token(surface=surface, normalized=_normalize(surface), span=(start, end))


def tokenize(text: str) -> list[Token]:
    """Split on whitespace, then peel leading/trailing punctuation into
    separate tokens.

    A trailing period stays attached when the remainder still contains a
    period, so abbreviation-like forms ("U.S.", "e.g.") survive as single
    tokens. Interior punctuation is never split.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        start, end = i, j
        while start < end and _is_punct_char(text[start]):
            tokens.append(_token(text, start, start + 1))
            start += 1
        trailing: list[tuple[int, int]] = []
        while end > start and _is_punct_char(text[end - 1]):
            ch = text[end - 1]
            if ch == "." and "." in text[start : end - 1]:
                break
            trailing.append((end - 1, end))
            end -= 1
        if start < end:
            tokens.append(_token(text, start, end))
        for a, b in reversed(trailing):
            tokens.append(_token(text, a, b))
        i = j
    return tokens


def normalized_tokens(text: str) -> list[str]:
    """Lowercased alphanumeric token stream with punctuation tokens dropped.

    This is the normalization every metric operates on.
    """
    return [t.normalized for t in tokenize(text) if t.normalized]


def _word_before(text: str, dot_index: int) -> str:
    start = dot_index
    while start > 0 and not text[start - 1].isspace():
        start -= 1
    word = text[start : dot_index + 1]
    return word.lstrip("\"'([{").lower()


def split_sentences(
    text: str,
    abbreviations: frozenset[str] | set[str] = DEFAULT_ABBREVIATIONS,
) -> list[Sentence]:
    """Segment text into sentences.

    A boundary sits after '.', '!' or '?' when followed by whitespace and
    an uppercase letter, or at end of text. Known abbreviations never end
    a sentence.
    """
    n = len(text)
    boundaries: list[int] = []
    for i, ch in enumerate(text):
        if ch not in _SENTENCE_TERMINATORS:
            continue
        k = i + 1
        while k < n and text[k].isspace():
            k += 1
        if k == i + 1 and k < n:
            continue  # terminator glued to the next char, e.g. "3.5" or "U.S."
        if k < n and not text[k].isupper():
            continue
        if ch == "." and _word_before(text, i) in abbreviations:
            continue
        boundaries.append(i + 1)
    if not boundaries or boundaries[-1] < n:
        boundaries.append(n)

    sentences: list[Sentence] = []
    prev = 0
    for bound in boundaries:
        seg_start, seg_end = prev, bound
        prev = bound
        while seg_start < seg_end and text[seg_start].isspace():
            seg_start += 1
        while seg_end > seg_start and text[seg_end - 1].isspace():
            seg_end -= 1
        if seg_start >= seg_end:
            continue
        seg_text = text[seg_start:seg_end]
        toks = tuple(
            Token(t.surface, t.normalized, (t.span[0] + seg_start, t.span[1] + seg_start))
            for t in tokenize(seg_text)
        )
        sentences.append(
            Sentence(index=len(sentences), tokens=toks, span=(seg_start, seg_end), text=seg_text)
        )
    return sentences


def _is_capitalized(tok: Token) -> bool:
    return bool(tok.normalized) and tok.surface[0].isupper()


def _is_acronym(tok: Token) -> bool:
    return tok.surface.isupper() and 2 <= len(tok.normalized) <= 6


def _slice_surface(sentence: Sentence, first: Token, last: Token) -> str:
    a = first.span[0] - sentence.span[0]
    b = last.span[1] - sentence.span[0]
    return sentence.text[a:b]


def extract_entities(
    sentences: Sequence[Sentence],
    unit_words: frozenset[str] | set[str] = DEFAULT_UNIT_WORDS,
) -> list[EntityMention]:
    """Rule-based entity mentions: capitalized runs, acronyms, number+unit.

    A run that opens the sentence only counts when it is multi-token or
    ALL-CAPS; this suppresses ordinary sentence-initial capitalization.
    """
    mentions: list[EntityMention] = []
    seen: set[tuple[str, int]] = set()

    def emit(surface: str, sent_idx: int, kind: EntityKind) -> None:
        key = (surface, sent_idx)
        if key not in seen:
            seen.add(key)
            mentions.append(EntityMention(surface=surface, sentence_index=sent_idx, kind=kind))

    for sent in sentences:
        # punctuation tokens break capitalized runs, so "Rome, Paris" is
        # two mentions while "United Nations" stays one
        run: list[Token] = []
        run_starts_sentence = False
        words_seen = 0
        for tok in sent.tokens:
            if tok.normalized and _is_capitalized(tok):
                if not run:
                    run_starts_sentence = words_seen == 0
                run.append(tok)
                words_seen += 1
                continue
            if run:
                _flush_run(run, run_starts_sentence, sent, emit)
                run = []
            if tok.normalized:
                words_seen += 1
        if run:
            _flush_run(run, run_starts_sentence, sent, emit)

        raw = list(sent.tokens)
        for left, right in zip(raw, raw[1:]):
            is_number = bool(left.normalized) and left.normalized.isdigit()
            is_unit = right.normalized in unit_words or right.surface == "%"
            if is_number and is_unit:
                emit(_slice_surface(sent, left, right), sent.index, EntityKind.NUMBER_UNIT)
    return mentions


def _flush_run(run, starts_sentence, sent, emit) -> None:
    if starts_sentence and len(run) == 1 and not _is_acronym(run[0]):
        return
    if len(run) == 1 and _is_acronym(run[0]):
        emit(run[0].surface, sent.index, EntityKind.ACRONYM)
        return
    emit(_slice_surface(sent, run[0], run[-1]), sent.index, EntityKind.CAPITALIZED_SPAN)


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """Load the stopword list, one word per line; bundled list by default."""
    if path is None:
        data = resources.files("sumctl.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        data = Path(path).read_text("utf-8")
    return frozenset(w.strip() for w in data.splitlines() if w.strip())


def tfidf_weights(
    documents: Iterable,
    stopwords: frozenset[str] | set[str] | None = None,
) -> dict[str, dict[str, float]]:
    """Per-document TF-IDF weights over normalized terms.

    tf = term count / document token count; idf = ln((1 + N) / (1 + df)) + 1
    (add-one smoothing keeps single-document corpora well defined).
    Stopwords get weight 0.
    """
    docs = list(documents)
    if not docs:
        raise ValidationError("tfidf_weights requires a nonempty corpus")
    if stopwords is None:
        stopwords = load_stopwords()

    term_counts: dict[str, Counter] = {}
    token_totals: dict[str, int] = {}
    df: Counter = Counter()
    for doc in docs:
        terms = normalized_tokens(doc.text)
        counts = Counter(terms)
        term_counts[doc.id] = counts
        token_totals[doc.id] = len(terms)
        df.update(counts.keys())

    n_docs = len(docs)
    weights: dict[str, dict[str, float]] = {}
    for doc in docs:
        total = token_totals[doc.id]
        per_doc: dict[str, float] = {}
        for term, count in term_counts[doc.id].items():
            if term in stopwords:
                per_doc[term] = 0.0
                continue
            tf = count / total
            idf = math.log((1 + n_docs) / (1 + df[term])) + 1.0
            per_doc[term] = tf * idf
        weights[doc.id] = per_doc
    return weights
