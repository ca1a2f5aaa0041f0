"""Prompt-policy optimization with an epsilon-greedy bandit.

Each prompt configuration is an arm. An episode renders the selected
arm's prompt for one document, generates a summary, and scores it against
the reference; the scalar reward is a weighted metric combination with
the edit rate negated. Per-task policies are independent and seeded, and
a multi-task loss aggregates their mean rewards.
"""

from __future__ import annotations

import hashlib
import math
import random
from dataclasses import dataclass, field
from typing import Sequence

from .backend import GeneratedSummary, GenerationRequest, SummaryBackend
from .corpus import CorpusStore, TextType
from .errors import ValidationError
from .metrics import MetricReport, evaluate_pair
from .prompt import (
    ABSTRACTION_LEVELS,
    LENGTH_BUDGETS,
    ObjectiveWeights,
    PromptConfig,
    TemplateId,
    enumerate_configs,
    render_prompt,
    score_prompt,
)
from .semgraph import build_semantic_graph
from .textproc import tfidf_weights

DEFAULT_EPSILON_START = 0.3
DEFAULT_EPSILON_END = 0.05


def stable_hash64(text: str) -> int:
    """Process-independent 64-bit hash (Python's ``hash`` is salted)."""
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:8], "big")


@dataclass(frozen=True)
class RewardWeights:
    """Weights combining ROUGE-L F1, BLEU, and (negated) TER; sum to 1."""

    w_rouge_l: float = 0.5
    w_bleu: float = 0.3
    w_ter: float = 0.2

    def __post_init__(self):
        for name in ("w_rouge_l", "w_bleu", "w_ter"):
            if getattr(self, name) < 0:
                raise ValidationError(f"{name} must be nonnegative")
        total = self.w_rouge_l + self.w_bleu + self.w_ter
        if abs(total - 1.0) > 1e-9:
            raise ValidationError(f"reward weights must sum to 1, got {total}")


def reward(
    gen: GeneratedSummary | str,
    reference: str,
    weights: RewardWeights = RewardWeights(),
) -> float:
    """Scalar reward of a generated summary against its reference.

    R = w_rouge_l * rougeL_f1 + w_bleu * bleu - w_ter * min(ter, 1);
    range [-w_ter, w_rouge_l + w_bleu]. Higher is better.
    """
    if not reference:
        raise ValidationError("reward requires a nonempty reference")
    text = gen.text if isinstance(gen, GeneratedSummary) else gen
    report = evaluate_pair(text, reference)
    return (
        weights.w_rouge_l * report.rougeL_f1
        + weights.w_bleu * report.bleu
        - weights.w_ter * min(report.ter, 1.0)
    )


@dataclass
class PolicyState:
    """Arm statistics for one task's epsilon-greedy policy.

    ``values`` holds incremental mean rewards; an unpulled arm has value
    0. ``update`` mutates in place, matching the sequential episode loop.
    """

    arms: list[PromptConfig]
    counts: list[int] = field(default_factory=list)
    values: list[float] = field(default_factory=list)
    epsilon_start: float = DEFAULT_EPSILON_START
    epsilon_end: float = DEFAULT_EPSILON_END
    horizon: int = 1
    rng_seed: int = 0

    def __post_init__(self):
        if not self.counts:
            self.counts = [0] * len(self.arms)
        if not self.values:
            self.values = [0.0] * len(self.arms)
        if len(self.counts) != len(self.arms) or len(self.values) != len(self.arms):
            raise ValidationError("counts and values must match the arm count")
        for name in ("epsilon_start", "epsilon_end"):
            eps = getattr(self, name)
            if not 0.0 <= eps <= 1.0:
                raise ValidationError(f"{name} must be in [0, 1], got {eps}")
        if self.horizon < 1:
            raise ValidationError("horizon must be >= 1")
        if not 0 <= self.rng_seed < 2**64:
            raise ValidationError("rng_seed must be a 64-bit unsigned integer")
        self._rng = random.Random(self.rng_seed)

    @property
    def total_pulls(self) -> int:
        return sum(self.counts)

    def mean_reward(self) -> float:
        pulls = self.total_pulls
        if pulls == 0:
            return 0.0
        return sum(v * c for v, c in zip(self.values, self.counts)) / pulls

    def best_arm(self) -> int:
        best = 0
        for i in range(1, len(self.values)):
            if self.values[i] > self.values[best]:
                best = i
        return best

    def to_dict(self) -> dict:
        return {
            "arms": [
                {
                    "template_id": arm.template_id.value,
                    "length_budget": arm.length_budget,
                    "abstraction_level": arm.abstraction_level,
                    "style_tag": arm.style_tag.value,
                }
                for arm in self.arms
            ],
            "counts": list(self.counts),
            "values": list(self.values),
        }


def epsilon_at(state: PolicyState, step: int) -> float:
    span = max(1, state.horizon - 1)
    return state.epsilon_start + (state.epsilon_end - state.epsilon_start) * step / span


def select_arm(state: PolicyState, step: int) -> int:
    """Pick an arm: explore uniformly with probability epsilon(step),
    otherwise exploit the highest value (ties to the lowest index)."""
    if not state.arms:
        raise ValidationError("cannot select from an empty arm set")
    if not 0 <= step < state.horizon:
        raise ValidationError(f"step {step} outside horizon {state.horizon}")
    eps = epsilon_at(state, step)
    if state._rng.random() < eps:
        return state._rng.randrange(len(state.arms))
    return state.best_arm()


def update(state: PolicyState, arm: int, r: float) -> PolicyState:
    """Incremental-mean value update; returns the (mutated) state."""
    if not 0 <= arm < len(state.arms):
        raise ValidationError(f"arm index {arm} out of range")
    if not math.isfinite(r):
        raise ValidationError(f"reward must be finite, got {r}")
    state.counts[arm] += 1
    state.values[arm] += (r - state.values[arm]) / state.counts[arm]
    return state


@dataclass(frozen=True)
class TaskSpec:
    """One optimization task: a text type, its loss weight, and the
    abstraction level its prompts should target."""

    task_id: str
    text_type: TextType
    lambda_k: float
    target_abstraction: int

    def __post_init__(self):
        if not self.task_id:
            raise ValidationError("task_id must be nonempty")
        object.__setattr__(self, "text_type", TextType(self.text_type))
        if self.lambda_k < 0:
            raise ValidationError("lambda_k must be nonnegative")
        if self.target_abstraction not in ABSTRACTION_LEVELS:
            raise ValidationError(f"target_abstraction must be in {ABSTRACTION_LEVELS}")


def _validate_tasks(tasks: Sequence[TaskSpec]) -> None:
    if not tasks:
        raise ValidationError("at least one task is required")
    ids = [t.task_id for t in tasks]
    if len(set(ids)) != len(ids):
        raise ValidationError("task ids must be unique")
    total = sum(t.lambda_k for t in tasks)
    if abs(total - 1.0) > 1e-9:
        raise ValidationError(f"task weights must sum to 1, got {total}")


@dataclass(frozen=True)
class TraceRow:
    """One episode's outcome, flattened for CSV emission."""

    episode: int
    task_id: str
    doc_id: str
    arm: int
    prompt_loss_total: float
    rouge1_f1: float
    rouge2_f1: float
    rougeL_f1: float
    bleu: float
    ter: float
    reward: float


def run_episodes(
    store: CorpusStore,
    tasks: Sequence[TaskSpec],
    backend: SummaryBackend,
    episodes: int,
    seed: int,
    templates: Sequence[TemplateId | str] = tuple(TemplateId),
    budgets: Sequence[int] = LENGTH_BUDGETS,
    levels: Sequence[int] = ABSTRACTION_LEVELS,
    objective_weights: ObjectiveWeights = ObjectiveWeights(),
    reward_weights: RewardWeights = RewardWeights(),
    epsilon_start: float = DEFAULT_EPSILON_START,
    epsilon_end: float = DEFAULT_EPSILON_END,
    max_output_tokens: int = 256,
) -> tuple[dict[str, PolicyState], list[TraceRow]]:
    """Run the bandit loop for every task.

    Each task owns an independent policy over the config grid restricted
    to its text type and an independent stream seeded with
    ``seed XOR stable_hash64(task_id)``. Episodes walk the task's
    documents round-robin in a seeded shuffle order. Fully deterministic
    for a deterministic backend.
    """
    if episodes < 1:
        raise ValidationError("episodes must be >= 1")
    _validate_tasks(tasks)
    weights_by_doc = tfidf_weights(store)

    states: dict[str, PolicyState] = {}
    trace: list[TraceRow] = []
    for task in tasks:
        docs = store.by_type(task.text_type)
        if not docs:
            raise ValidationError(f"task {task.task_id!r} matches no documents")
        for doc in docs:
            if not doc.reference:
                raise ValidationError(
                    f"task {task.task_id!r}: document {doc.id!r} has no reference"
                )
        arms = enumerate_configs(templates, budgets, levels, [task.text_type])
        task_seed = seed ^ stable_hash64(task.task_id)
        state = PolicyState(
            arms=arms,
            epsilon_start=epsilon_start,
            epsilon_end=epsilon_end,
            horizon=episodes,
            rng_seed=task_seed,
        )
        order = list(docs)
        random.Random(task_seed ^ stable_hash64("doc-order")).shuffle(order)

        graphs = {}
        prompts: dict[tuple[str, int], tuple] = {}
        for step in range(episodes):
            doc = order[step % len(order)]
            arm = select_arm(state, step)
            if doc.id not in graphs:
                graphs[doc.id] = build_semantic_graph(doc, weights_by_doc[doc.id])
            graph = graphs[doc.id]
            cache_key = (doc.id, arm)
            if cache_key not in prompts:
                rendered = render_prompt(state.arms[arm], graph)
                prompt_score = score_prompt(
                    rendered,
                    graph,
                    target_abstraction=task.target_abstraction,
                    weights=objective_weights,
                    budget=state.arms[arm].length_budget,
                )
                prompts[cache_key] = (rendered, prompt_score)
            rendered, prompt_score = prompts[cache_key]
            request = GenerationRequest(
                prompt=rendered, source_text=doc.text, max_output_tokens=max_output_tokens
            )
            generated = backend.generate(request, graph)
            report: MetricReport = evaluate_pair(generated.text, doc.reference)
            r = reward(generated, doc.reference, reward_weights)
            update(state, arm, r)
            trace.append(
                TraceRow(
                    episode=step,
                    task_id=task.task_id,
                    doc_id=doc.id,
                    arm=arm,
                    prompt_loss_total=prompt_score.total,
                    rouge1_f1=report.rouge1_f1,
                    rouge2_f1=report.rouge2_f1,
                    rougeL_f1=report.rougeL_f1,
                    bleu=report.bleu,
                    ter=report.ter,
                    reward=r,
                )
            )
        states[task.task_id] = state
    return states, trace


def multi_task_loss(states: dict[str, PolicyState], tasks: Sequence[TaskSpec]) -> float:
    """Weighted total loss: sum over tasks of lambda_k * (1 - mean reward),
    with the mean clipped to [0, 1]. An unpulled task contributes maximal
    loss 1."""
    _validate_tasks(tasks)
    for task in tasks:
        if task.task_id not in states:
            raise ValidationError(f"no policy state for task {task.task_id!r}")
    total = 0.0
    for task in tasks:
        state = states[task.task_id]
        if state.total_pulls == 0:
            loss_k = 1.0
        else:
            loss_k = 1.0 - min(1.0, max(0.0, state.mean_reward()))
        total += task.lambda_k * loss_k
    return total
