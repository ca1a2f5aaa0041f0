"""Prompt configurations, deterministic rendering, and the multi-level
prompt objective.

A prompt is assembled from a template of four clauses (instruction,
sentence-count directive, style, keywords). Clauses and then keywords are
packed greedily under the token budget, so short budgets yield bare
instructions and long budgets absorb progressively less salient keywords.

The objective scores a rendered prompt with three losses in [0, 1]:
semantic coverage of the document's most salient content, distance from
the requested abstraction level, and contextual fit (budget overflow plus
style mismatch). The total is their weighted sum; lower is better.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .corpus import TextType
from .errors import ValidationError
from .semgraph import SemanticGraph, top_content
from .textproc import tokenize

LENGTH_BUDGETS = (10, 20, 30, 40, 50, 60)
ABSTRACTION_LEVELS = (1, 2, 3, 4, 5)
MIN_BUDGET = 8  # smallest budget that fits an instruction clause
SEMANTIC_TOP_M = 10


class TemplateId(str, Enum):
    CONCISE = "concise"
    DETAILED = "detailed"
    STRUCTURED = "structured"


# level -> compression phrase used in the sentence-count directive
_COMPRESSION_PHRASES = {
    1: "preserving full detail",
    2: "keeping supporting detail",
    3: "balancing detail and brevity",
    4: "compressing to main points",
    5: "distilling the core message",
}

_STYLE_WORDS = {
    TextType.NEWS: "news",
    TextType.BLOG: "blog",
    TextType.ACADEMIC: "academic",
    TextType.UNKNOWN: "plain",
}


@dataclass(frozen=True)
class PromptConfig:
    """Discrete knobs a prompt is rendered from.

    ``keyword_count`` acts as a cap on embedded keywords when positive
    (0 means fill freely); rendered prompts record the actual fit count
    here. Budgets are any positive token count; experiment sweeps restrict
    them to the standard grid.
    """

    template_id: TemplateId
    length_budget: int
    abstraction_level: int
    keyword_count: int = 0
    style_tag: TextType = TextType.NEWS

    def __post_init__(self):
        object.__setattr__(self, "template_id", TemplateId(self.template_id))
        object.__setattr__(self, "style_tag", TextType(self.style_tag))
        if self.length_budget < 1:
            raise ValidationError(f"length_budget must be positive, got {self.length_budget}")
        if self.abstraction_level not in ABSTRACTION_LEVELS:
            raise ValidationError(
                f"abstraction_level must be in {ABSTRACTION_LEVELS}, got {self.abstraction_level}"
            )
        if self.keyword_count < 0:
            raise ValidationError(f"keyword_count must be >= 0, got {self.keyword_count}")


@dataclass(frozen=True)
class ObjectiveWeights:
    """Weights for the three prompt losses; they must sum to 1."""

    lambda1: float = 0.5
    lambda2: float = 0.3
    lambda3: float = 0.2

    def __post_init__(self):
        for name in ("lambda1", "lambda2", "lambda3"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        total = self.lambda1 + self.lambda2 + self.lambda3
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"objective weights must sum to 1, got {total}")

    @classmethod
    def normalized(cls, lambda1: float, lambda2: float, lambda3: float) -> "ObjectiveWeights":
        total = lambda1 + lambda2 + lambda3
        if total <= 0:
            raise ValidationError("at least one objective weight must be positive")
        return cls(lambda1 / total, lambda2 / total, lambda3 / total)


@dataclass(frozen=True)
class Prompt:
    text: str
    token_count: int
    config: PromptConfig
    keywords: tuple[str, ...]
    target_sentences: int

    def __post_init__(self):
        actual = len(tokenize(self.text))
        if self.token_count != actual:
            raise ValidationError(f"token_count {self.token_count} != tokenized length {actual}")
        if self.token_count > self.config.length_budget:
            raise ValidationError(
                f"prompt has {self.token_count} tokens, budget {self.config.length_budget}"
            )
        for keyword in self.keywords:
            if keyword not in self.text:
                raise ValidationError(f"keyword {keyword!r} missing from prompt text")


@dataclass(frozen=True)
class PromptScore:
    l_semantic: float
    l_abstract: float
    l_contextual: float
    total: float
    weights: ObjectiveWeights


def target_sentence_count(abstraction_level: int) -> int:
    """Map abstraction level 1..5 to a requested sentence count (5..1)."""
    return 6 - abstraction_level


def _load_template(template_id: TemplateId, template_dir: str | Path | None) -> list[str]:
    name = f"{template_id.value}.txt"
    if template_dir is None:
        text = resources.files("sumctl.data.templates").joinpath(name).read_text("utf-8")
    else:
        text = (Path(template_dir) / name).read_text("utf-8")
    lines = [line.strip() for line in text.splitlines() if line.strip()]
    if len(lines) != 4:
        raise ValidationError(f"template {name} must have 4 clause lines, got {len(lines)}")
    return lines


def render_prompt(
    config: PromptConfig,
    graph: SemanticGraph,
    template_dir: str | Path | None = None,
) -> Prompt:
    """Render a prompt from a configuration and a ranked graph.

    Clauses are added in order (instruction, sentence directive, style,
    keywords) while they fit the budget; keywords are then appended in
    salience order until the next one would overflow. Deterministic.
    """
    budget = config.length_budget
    if budget < MIN_BUDGET:
        raise ValidationError("budget below minimum")

    instruction, abstraction_tpl, style_tpl, keyword_tpl = _load_template(
        config.template_id, template_dir
    )
    sentences = target_sentence_count(config.abstraction_level)
    noun = "sentence" if sentences == 1 else "sentences"
    abstraction_clause = abstraction_tpl.replace(
        "{abstraction}",
        f"{sentences} {noun}, {_COMPRESSION_PHRASES[config.abstraction_level]}",
    )
    style_clause = style_tpl.replace("{style}", _STYLE_WORDS[config.style_tag])

    def measure(text: str) -> int:
        return len(tokenize(text))

    parts = [instruction]
    for clause in (abstraction_clause, style_clause):
        if measure(" ".join(parts + [clause])) <= budget:
            parts.append(clause)
    base = " ".join(parts)

    candidates = [surface for surface, _ in top_content(graph, len(graph.content_indices))]
    cap = config.keyword_count if config.keyword_count > 0 else len(candidates)
    selected: list[str] = []
    text = base
    for surface in candidates[:cap]:
        trial = selected + [surface]
        trial_text = base + " " + keyword_tpl.replace("{keywords}", ", ".join(trial))
        if measure(trial_text) > budget:
            break
        selected = trial
        text = trial_text

    return Prompt(
        text=text,
        token_count=measure(text),
        config=replace(config, keyword_count=len(selected)),
        keywords=tuple(selected),
        target_sentences=sentences,
    )


def score_prompt(
    prompt: Prompt,
    graph: SemanticGraph,
    target_abstraction: int,
    weights: ObjectiveWeights = ObjectiveWeights(),
    budget: int | None = None,
    top_m: int = SEMANTIC_TOP_M,
) -> PromptScore:
    """Score a prompt against a document graph and a target abstraction.

    * semantic loss: 1 minus the salience mass of embedded keywords over
      the mass of the ``top_m`` most salient content nodes (1 when the
      graph has no content nodes);
    * abstraction loss: |target - configured| / 4;
    * contextual loss: half budget overflow fraction (capped at 1) plus
      half style/text-type mismatch.
    """
    if target_abstraction not in ABSTRACTION_LEVELS:
        raise ValidationError(f"target_abstraction must be in {ABSTRACTION_LEVELS}")
    if budget is None:
        budget = prompt.config.length_budget

    ranked = top_content(graph, top_m)
    denominator = sum(salience for _, salience in ranked)
    if denominator <= 0:
        l_semantic = 1.0
    else:
        embedded = set(prompt.keywords)
        covered = sum(
            graph.nodes[i].salience
            for i in graph.content_indices
            if graph.nodes[i].surface in embedded
        )
        l_semantic = min(1.0, max(0.0, 1.0 - covered / denominator))

    l_abstract = abs(target_abstraction - prompt.config.abstraction_level) / 4.0

    overflow = max(0, prompt.token_count - budget) / budget
    mismatch = 1.0 if prompt.config.style_tag is not graph.text_type else 0.0
    l_contextual = 0.5 * min(1.0, overflow) + 0.5 * mismatch

    total = (
        weights.lambda1 * l_semantic
        + weights.lambda2 * l_abstract
        + weights.lambda3 * l_contextual
    )
    return PromptScore(
        l_semantic=l_semantic,
        l_abstract=l_abstract,
        l_contextual=l_contextual,
        total=total,
        weights=weights,
    )


def enumerate_configs(
    templates: Iterable[TemplateId | str] = tuple(TemplateId),
    budgets: Iterable[int] = LENGTH_BUDGETS,
    levels: Iterable[int] = ABSTRACTION_LEVELS,
    styles: Iterable[TextType | str] = (TextType.NEWS,),
) -> list[PromptConfig]:
    """Cartesian product of the config axes in lexicographic order.

    Axes are deduplicated and sorted before the product; an empty axis is
    a validation error.
    """

    def prep(axis: Iterable, convert) -> list:
        values = sorted({convert(v) for v in axis}, key=lambda v: getattr(v, "value", v))
        if not values:
            raise ValidationError("config axis must be nonempty")
        return values

    template_axis = prep(templates, TemplateId)
    budget_axis = prep(budgets, int)
    level_axis = prep(levels, int)
    style_axis = prep(styles, TextType)
    return [
        PromptConfig(
            template_id=template,
            length_budget=budget,
            abstraction_level=level,
            style_tag=style,
        )
        for template, budget, level, style in itertools.product(
            template_axis, budget_axis, level_axis, style_axis
        )
    ]
