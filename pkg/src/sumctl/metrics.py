"""Reference-based summary metrics implemented from scratch.

All four metrics operate on normalized token sequences (lowercased,
punctuation tokens dropped) produced by :func:`sumctl.textproc.tokenize`;
that normalization is applied inside each string-level entry point.
Token-level variants are exposed for callers that already hold sequences.

Conventions, fixed here and stated in output metadata:

* ROUGE scores are reported as (precision, recall, F1); the F1 variant is
  the headline number.
* BLEU uses add-one smoothing on numerator and denominator for n >= 2 so
  short texts do not zero out, with the usual brevity penalty.
* TER counts token insertions, deletions, substitutions, and block shifts
  of contiguous spans (cost 1 each); shifts are located with a greedy
  loop since the exact problem is intractable.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Sequence

from .errors import ValidationError
from .textproc import normalized_tokens

PRF = tuple[float, float, float]

#: Longest span a single block shift may move. Matches the usual practical
#: limit and keeps the greedy search quadratic.
MAX_SHIFT_SPAN = 10


@dataclass(frozen=True)
class MetricReport:
    """All metric values for one (hypothesis, reference) pair."""

    rouge_n: dict[int, PRF]
    rouge_l: PRF
    bleu: float
    ter: float

    @property
    def rouge1_f1(self) -> float:
        return self.rouge_n[1][2]

    @property
    def rouge2_f1(self) -> float:
        return self.rouge_n[2][2]

    @property
    def rougeL_f1(self) -> float:
        return self.rouge_l[2]


def _f1(precision: float, recall: float) -> float:
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def rouge_n_tokens(hyp: Sequence[str], ref: Sequence[str], n: int) -> PRF:
    if n < 1:
        raise ValidationError(f"rouge_n requires n >= 1, got {n}")
    hyp_counts = _ngram_counts(hyp, n)
    ref_counts = _ngram_counts(ref, n)
    hyp_total = sum(hyp_counts.values())
    ref_total = sum(ref_counts.values())
    if hyp_total == 0 or ref_total == 0:
        return (0.0, 0.0, 0.0)
    overlap = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
    precision = overlap / hyp_total
    recall = overlap / ref_total
    return (precision, recall, _f1(precision, recall))


def rouge_n(hyp: str, ref: str, n: int) -> PRF:
    """Clipped n-gram overlap precision/recall/F1."""
    return rouge_n_tokens(normalized_tokens(hyp), normalized_tokens(ref), n)


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence (single-row dynamic program)."""
    m, n = len(a), len(b)
    if m == 0 or n == 0:
        return 0
    if m < n:
        a, b, m, n = b, a, n, m
    row = [0] * (n + 1)
    for x in a:
        diag = 0
        for j in range(1, n + 1):
            above = row[j]
            if x == b[j - 1]:
                row[j] = diag + 1
            elif row[j - 1] > above:
                row[j] = row[j - 1]
            diag = above
    return row[n]


def rouge_l_tokens(hyp: Sequence[str], ref: Sequence[str]) -> PRF:
    if not hyp or not ref:
        return (0.0, 0.0, 0.0)
    lcs = lcs_length(hyp, ref)
    precision = lcs / len(hyp)
    recall = lcs / len(ref)
    return (precision, recall, _f1(precision, recall))


def rouge_l(hyp: str, ref: str) -> PRF:
    """LCS-based precision/recall/F1 over normalized tokens."""
    return rouge_l_tokens(normalized_tokens(hyp), normalized_tokens(ref))


def bleu_tokens(hyp: Sequence[str], ref: Sequence[str], max_n: int = 4) -> float:
    if max_n < 1:
        raise ValidationError(f"bleu requires max_n >= 1, got {max_n}")
    h_len, r_len = len(hyp), len(ref)
    if h_len == 0:
        return 0.0
    product = 1.0
    for n in range(1, max_n + 1):
        hyp_counts = _ngram_counts(hyp, n)
        ref_counts = _ngram_counts(ref, n)
        total = sum(hyp_counts.values())
        clipped = sum(min(count, ref_counts[gram]) for gram, count in hyp_counts.items())
        if n == 1:
            p_n = clipped / total
        else:
            p_n = (clipped + 1) / (total + 1)
        if p_n == 0.0:
            return 0.0
        product *= p_n
    brevity = 1.0 if h_len >= r_len else math.exp(1.0 - r_len / h_len)
    return brevity * product ** (1.0 / max_n)


def bleu(hyp: str, ref: str, max_n: int = 4) -> float:
    """Geometric mean of modified n-gram precisions times the brevity penalty.

    Precisions for n >= 2 are smoothed as (matches + 1) / (total + 1);
    unigram precision is left unsmoothed so disjoint texts score 0.
    """
    return bleu_tokens(normalized_tokens(hyp), normalized_tokens(ref), max_n)


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Word-level Levenshtein distance (insert / delete / substitute, cost 1)."""
    m, n = len(a), len(b)
    if m == 0:
        return n
    if n == 0:
        return m
    prev = list(range(n + 1))
    for i, x in enumerate(a, 1):
        curr = [i] + [0] * n
        for j in range(1, n + 1):
            cost = 0 if x == b[j - 1] else 1
            curr[j] = min(prev[j] + 1, curr[j - 1] + 1, prev[j - 1] + cost)
        prev = curr
    return prev[n]


def _ref_span_positions(ref: Sequence[str]) -> dict[tuple[str, ...], list[int]]:
    positions: dict[tuple[str, ...], list[int]] = {}
    n = len(ref)
    for i in range(n):
        for j in range(i + 1, min(n, i + MAX_SHIFT_SPAN) + 1):
            positions.setdefault(tuple(ref[i:j]), []).append(i)
    return positions


def _best_shift(
    hyp: list[str],
    ref: Sequence[str],
    current_ed: int,
    span_positions: dict[tuple[str, ...], list[int]],
) -> list[str] | None:
    """The single block shift that most reduces edit distance, or None.

    Only spans that occur contiguously in the reference are candidates,
    and each is moved toward one of its reference positions. A shift is
    worthwhile only when the reduction exceeds its own cost of 1, which
    also guarantees the greedy loop terminates.
    """
    best_gain = 1
    best: list[str] | None = None
    n = len(hyp)
    for i in range(n):
        for j in range(i + 1, min(n, i + MAX_SHIFT_SPAN) + 1):
            span = tuple(hyp[i:j])
            starts = span_positions.get(span)
            if not starts:
                continue
            rest = hyp[:i] + hyp[j:]
            tried: set[int] = set()
            for ref_start in starts:
                k = min(ref_start, len(rest))
                if k == i or k in tried:
                    continue
                tried.add(k)
                candidate = rest[:k] + list(span) + rest[k:]
                gain = current_ed - edit_distance(candidate, ref)
                if gain > best_gain:
                    best_gain = gain
                    best = candidate
    return best


def ter_tokens(hyp: Sequence[str], ref: Sequence[str], use_shifts: bool = True) -> float:
    h = list(hyp)
    if not ref:
        # Documented convention: empty reference costs one edit per stray token.
        return 0.0 if not h else float(len(h))
    shifts = 0
    if use_shifts and h:
        span_positions = _ref_span_positions(ref)
        current_ed = edit_distance(h, ref)
        while current_ed > 1:
            shifted = _best_shift(h, ref, current_ed, span_positions)
            if shifted is None:
                break
            h = shifted
            shifts += 1
            current_ed = edit_distance(h, ref)
    return (shifts + edit_distance(h, ref)) / len(ref)


def ter(hyp: str, ref: str, use_shifts: bool = True) -> float:
    """Translation edit rate: minimum-effort edits (insert, delete,
    substitute, block shift) divided by reference length.

    ``use_shifts=False`` reduces to plain word edit distance over |ref|.
    """
    return ter_tokens(normalized_tokens(hyp), normalized_tokens(ref), use_shifts)


def evaluate_pair(hyp: str, ref: str) -> MetricReport:
    """Compute ROUGE-1/2, ROUGE-L, BLEU, and TER for one pair."""
    hyp_tokens = normalized_tokens(hyp)
    ref_tokens = normalized_tokens(ref)
    return MetricReport(
        rouge_n={
            1: rouge_n_tokens(hyp_tokens, ref_tokens, 1),
            2: rouge_n_tokens(hyp_tokens, ref_tokens, 2),
        },
        rouge_l=rouge_l_tokens(hyp_tokens, ref_tokens),
        bleu=bleu_tokens(hyp_tokens, ref_tokens),
        ter=ter_tokens(hyp_tokens, ref_tokens),
    )
