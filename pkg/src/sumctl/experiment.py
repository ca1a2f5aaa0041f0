"""Experiment runner: seeded sweeps over prompt length, input noise, or
text type, with CSV records and a Markdown report.

Sweeps evaluate generated summaries against the clean reference even when
the source text is corrupted; noise is an input-degradation axis, never a
change to the gold standard. Figures are emitted as data tables, not
images.
"""

from __future__ import annotations

import csv
import dataclasses
import logging
import statistics
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Sequence

from .backend import GenerationRequest, SummaryBackend
from .corpus import CorpusStore, Document, NoiseSpec, NoiseOp, TextType, apply_noise
from .errors import (
    ConfigurationError,
    GenerationError,
    RequestError,
    SweepError,
    TransportError,
    ValidationError,
)
from .metrics import evaluate_pair
from .optimizer import RewardWeights, reward, stable_hash64
from .prompt import (
    ABSTRACTION_LEVELS,
    LENGTH_BUDGETS,
    ObjectiveWeights,
    PromptConfig,
    TemplateId,
    render_prompt,
    score_prompt,
)
from .semgraph import build_semantic_graph
from .textproc import tfidf_weights

log = logging.getLogger("sumctl.experiment")

DEFAULT_NOISE_GRID = (0.0, 0.02, 0.04, 0.06, 0.08, 0.10)

#: Published comparison numbers carried as static annotations in reports;
#: the systems behind them are out of scope and never recomputed.
REPORTED_BASELINES = (
    ("DeepExtract", 0.42, 0.38, 0.35, 0.45),
    ("WhisperSum", 0.45, 0.40, 0.38, 0.42),
    ("ROUGE-SEM", 0.39, 0.36, 0.32, 0.48),
    ("FineSurE", 0.47, 0.43, 0.41, 0.40),
    ("Tofueval", 0.44, 0.39, 0.37, 0.43),
    ("Ours", 0.50, 0.46, 0.45, 0.38),
)

DEFAULT_METRICS = ("rouge1_f1", "rouge2_f1", "rougeL_f1", "bleu", "ter", "reward")


class SweepAxis(str, Enum):
    PROMPT_LENGTH = "prompt_length"
    NOISE = "noise"
    TEXT_TYPE = "text_type"


DEFAULT_FIXED = {
    "template_id": "concise",
    "abstraction_level": 4,
    "style_tag": "news",
    "prompt_length": 40,
    "noise_level": 0.0,
    "noise_operations": tuple(op.value for op in NoiseOp),
    "max_output_tokens": 256,
    "metrics": DEFAULT_METRICS,
    "objective_weights": (0.5, 0.3, 0.2),
    "reward_weights": (0.5, 0.3, 0.2),
}


def _required_knobs(axis: SweepAxis) -> set[str]:
    knobs = {
        "template_id",
        "abstraction_level",
        "noise_operations",
        "max_output_tokens",
        "metrics",
        "objective_weights",
        "reward_weights",
    }
    if axis is not SweepAxis.PROMPT_LENGTH:
        knobs.add("prompt_length")
    if axis is not SweepAxis.NOISE:
        knobs.add("noise_level")
    if axis is not SweepAxis.TEXT_TYPE:
        knobs.add("style_tag")
    return knobs


@dataclass
class SweepConfig:
    """One sweep: the axis, its grid, and every other knob pinned."""

    axis: SweepAxis
    grid: tuple
    fixed: dict = field(default_factory=dict)
    seed: int = 0
    corpus: Path | None = None
    output: Path | None = None

    def __post_init__(self):
        self.axis = SweepAxis(self.axis)
        self.grid = tuple(self.grid)

    @classmethod
    def with_defaults(
        cls,
        axis: SweepAxis | str,
        grid: Sequence,
        seed: int = 0,
        corpus: Path | None = None,
        output: Path | None = None,
        **overrides,
    ) -> "SweepConfig":
        fixed = dict(DEFAULT_FIXED)
        fixed.update(overrides)
        return cls(axis=SweepAxis(axis), grid=tuple(grid), fixed=fixed, seed=seed,
                   corpus=corpus, output=output)

    def validate(self) -> None:
        if not self.grid:
            raise ValidationError("sweep grid must be nonempty")
        if self.axis is SweepAxis.PROMPT_LENGTH:
            bad = [v for v in self.grid if v not in LENGTH_BUDGETS]
            if bad:
                raise ValidationError(f"prompt_length grid values must be in {LENGTH_BUDGETS}: {bad}")
        elif self.axis is SweepAxis.NOISE:
            bad = [v for v in self.grid if not 0.0 <= float(v) <= 1.0]
            if bad:
                raise ValidationError(f"noise grid values must lie in [0, 1]: {bad}")
        else:
            for v in self.grid:
                try:
                    TextType(v)
                except ValueError:
                    raise ValidationError(f"unknown text type in grid: {v!r}")
        missing = sorted(_required_knobs(self.axis) - set(self.fixed))
        if missing:
            raise ValidationError(f"fixed knobs missing for axis {self.axis.value}: {missing}")
        TemplateId(self.fixed["template_id"])
        if self.fixed["abstraction_level"] not in ABSTRACTION_LEVELS:
            raise ValidationError("fixed abstraction_level must be in 1..5")
        if "prompt_length" in self.fixed and self.fixed["prompt_length"] not in LENGTH_BUDGETS:
            raise ValidationError(f"fixed prompt_length must be in {LENGTH_BUDGETS}")
        if "style_tag" in self.fixed:
            TextType(self.fixed["style_tag"])
        if "noise_level" in self.fixed and not 0.0 <= float(self.fixed["noise_level"]) <= 1.0:
            raise ValidationError("fixed noise_level must lie in [0, 1]")


@dataclass(frozen=True)
class RunRecord:
    """One evaluated (document, grid point) pair; field order is the CSV schema."""

    run_id: str
    doc_id: str
    text_type: str
    prompt_length: int
    noise_level: float
    rouge1_f1: float
    rouge2_f1: float
    rougeL_f1: float
    bleu: float
    ter: float
    reward: float
    prompt_loss_total: float
    seed: int
    backend_id: str


RUN_RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(RunRecord))


def run_sweep(
    config: SweepConfig,
    backend: SummaryBackend,
    store: CorpusStore,
    workers: int | None = None,
) -> list[RunRecord]:
    """Evaluate every grid value x document pair; deterministic per seed.

    Each unit derives its own noise stream from (seed, grid value,
    doc id), so results are independent of worker scheduling. Backend
    failures skip the record and are logged; more than 10% skipped raises
    :class:`SweepError` carrying the completed records.
    """
    config.validate()
    if len(store) == 0:
        raise ValidationError("sweep requires a nonempty corpus")
    fixed = config.fixed
    axis = config.axis
    run_id = f"{axis.value}-seed{config.seed}"
    objective = ObjectiveWeights(*fixed["objective_weights"])
    reward_w = RewardWeights(*fixed["reward_weights"])
    noise_ops = frozenset(NoiseOp(op) for op in fixed["noise_operations"])
    vocabulary = store.vocabulary()

    jobs: list[tuple[int, object, Document]] = []
    for position, value in enumerate(config.grid):
        if axis is SweepAxis.TEXT_TYPE:
            docs = store.by_type(value)
            if not docs:
                raise ValidationError(f"no documents of text type {value!r} in the corpus")
        else:
            docs = list(store)
        for doc in docs:
            if not doc.reference:
                raise ValidationError(f"document {doc.id!r} has no reference to evaluate against")
            jobs.append((position, value, doc))

    # Corrupt sources and refresh term weights per grid value, so graphs
    # are built from exactly what the backend will see.
    noisy: dict[tuple[int, str], Document] = {}
    weights_for: dict[tuple[int, str], dict[str, float]] = {}
    for position, value in enumerate(config.grid):
        level = float(value) if axis is SweepAxis.NOISE else float(fixed["noise_level"])
        group = [doc for pos, _, doc in jobs if pos == position]
        corrupted: list[Document] = []
        for doc in group:
            if level > 0.0:
                unit_seed = (config.seed ^ stable_hash64(f"{axis.value}:{value!r}:{doc.id}")) % 2**64
                spec = NoiseSpec(level=level, operations=noise_ops, seed=unit_seed)
                corrupted.append(apply_noise(doc, spec, vocabulary=vocabulary))
            else:
                corrupted.append(doc)
        doc_weights = tfidf_weights(corrupted) if corrupted else {}
        for doc in corrupted:
            noisy[(position, doc.id)] = doc
            weights_for[(position, doc.id)] = doc_weights[doc.id]

    skipped: list[tuple[object, str, str]] = []

    def evaluate_unit(job: tuple[int, object, Document]) -> RunRecord | None:
        position, value, clean_doc = job
        source = noisy[(position, clean_doc.id)]
        budget = int(value) if axis is SweepAxis.PROMPT_LENGTH else int(fixed["prompt_length"])
        level = float(value) if axis is SweepAxis.NOISE else float(fixed["noise_level"])
        style = TextType(value) if axis is SweepAxis.TEXT_TYPE else TextType(fixed["style_tag"])
        prompt_config = PromptConfig(
            template_id=TemplateId(fixed["template_id"]),
            length_budget=budget,
            abstraction_level=int(fixed["abstraction_level"]),
            style_tag=style,
        )
        graph = build_semantic_graph(source, weights_for[(position, clean_doc.id)])
        rendered = render_prompt(prompt_config, graph)
        prompt_score = score_prompt(
            rendered,
            graph,
            target_abstraction=int(fixed["abstraction_level"]),
            weights=objective,
            budget=budget,
        )
        request = GenerationRequest(
            prompt=rendered,
            source_text=source.text,
            max_output_tokens=int(fixed["max_output_tokens"]),
        )
        try:
            generated = backend.generate(request, graph)
        except (GenerationError, TransportError, RequestError, ConfigurationError) as exc:
            log.warning("skipping %s at %s=%r: %s", clean_doc.id, axis.value, value, exc)
            skipped.append((value, clean_doc.id, str(exc)))
            return None
        report = evaluate_pair(generated.text, clean_doc.reference)
        return RunRecord(
            run_id=run_id,
            doc_id=clean_doc.id,
            text_type=clean_doc.text_type.value,
            prompt_length=budget,
            noise_level=level,
            rouge1_f1=report.rouge1_f1,
            rouge2_f1=report.rouge2_f1,
            rougeL_f1=report.rougeL_f1,
            bleu=report.bleu,
            ter=report.ter,
            reward=reward(generated, clean_doc.reference, reward_w),
            prompt_loss_total=prompt_score.total,
            seed=config.seed,
            backend_id=generated.backend_id,
        )

    if workers is None or workers <= 1:
        results = [evaluate_unit(job) for job in jobs]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(evaluate_unit, jobs))

    records = [r for r in results if r is not None]
    records.sort(key=lambda r: (_grid_position(r, config), r.doc_id))

    if skipped and len(skipped) > 0.10 * len(jobs):
        raise SweepError(
            f"{len(skipped)} of {len(jobs)} units skipped (over 10%)",
            records=records,
            skipped=skipped,
        )
    return records


def _axis_value(record: RunRecord, axis: SweepAxis):
    if axis is SweepAxis.PROMPT_LENGTH:
        return record.prompt_length
    if axis is SweepAxis.NOISE:
        return record.noise_level
    return record.text_type


def _grid_position(record: RunRecord, config: SweepConfig) -> int:
    value = _axis_value(record, config.axis)
    for position, grid_value in enumerate(config.grid):
        if config.axis is SweepAxis.NOISE:
            if float(grid_value) == value:
                return position
        elif config.axis is SweepAxis.PROMPT_LENGTH:
            if int(grid_value) == value:
                return position
        elif TextType(grid_value).value == value:
            return position
    return len(config.grid)


@dataclass(frozen=True)
class AggregateRow:
    grid_value: object
    mean: float
    std: float
    n: int


def aggregate(
    records: Sequence[RunRecord],
    axis: SweepAxis | str,
    metrics: Sequence[str] = DEFAULT_METRICS,
) -> dict[str, list[AggregateRow]]:
    """Group records by grid value: mean, sample std (0 when n=1), n."""
    if not records:
        raise ValidationError("aggregate requires at least one record")
    axis = SweepAxis(axis)
    groups: dict[object, list[RunRecord]] = {}
    for record in records:
        groups.setdefault(_axis_value(record, axis), []).append(record)

    tables: dict[str, list[AggregateRow]] = {}
    for metric in metrics:
        rows = []
        for value, group in groups.items():
            data = [getattr(r, metric) for r in group]
            mean = statistics.fmean(data)
            std = statistics.stdev(data) if len(data) > 1 else 0.0
            rows.append(AggregateRow(grid_value=value, mean=mean, std=std, n=len(data)))
        tables[metric] = rows
    return tables


def report(
    aggregates: dict[str, list[AggregateRow]],
    baselines: Sequence[tuple] = REPORTED_BASELINES,
    axis_label: str = "grid value",
) -> str:
    """Render the Markdown report: this run's metric table, the published
    baseline block (annotations only), and per-axis series tables."""
    if not aggregates:
        raise ValidationError("report requires nonempty aggregates")
    lines: list[str] = []
    lines.append("# Summary evaluation report")
    lines.append("")
    lines.append("ROUGE values are F1; the headline ROUGE-N column follows the ROUGE-2 convention.")
    lines.append("")
    lines.append("## Run metrics")
    lines.append("")
    lines.append("| Metric | Mean |")
    lines.append("| --- | --- |")
    for metric, rows in aggregates.items():
        total_n = sum(row.n for row in rows)
        overall = sum(row.mean * row.n for row in rows) / total_n if total_n else 0.0
        lines.append(f"| {metric} | {overall:.4f} |")
    lines.append("")
    lines.append("## Reported baselines (paper-reported, not reproduced)")
    lines.append("")
    lines.append(
        "The rows below restate previously published comparison numbers verbatim "
        "for context; this run does not recompute them."
    )
    lines.append("")
    lines.append("| Model | ROUGE-N | ROUGE-L | BLEU | TER |")
    lines.append("| --- | --- | --- | --- | --- |")
    for name, rouge_n, rouge_l, bleu_score, ter_score in baselines:
        lines.append(f"| {name} | {rouge_n:.2f} | {rouge_l:.2f} | {bleu_score:.2f} | {ter_score:.2f} |")
    lines.append("")
    lines.append(f"## Series by {axis_label}")
    for metric, rows in aggregates.items():
        lines.append("")
        lines.append(f"### {metric}")
        lines.append("")
        lines.append(f"| {axis_label} | mean | std | n |")
        lines.append("| --- | --- | --- | --- |")
        for row in rows:
            value = row.grid_value
            value_text = f"{value:g}" if isinstance(value, float) else str(value)
            lines.append(f"| {value_text} | {row.mean:.4f} | {row.std:.4f} | {row.n} |")
    lines.append("")
    return "\n".join(lines)


def write_records_csv(records: Sequence[RunRecord], path: str | Path) -> Path:
    """Write records with the exact RunRecord field order as header."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(RUN_RECORD_FIELDS)
        for record in records:
            writer.writerow([getattr(record, name) for name in RUN_RECORD_FIELDS])
    return path


def read_records_csv(path: str | Path) -> list[RunRecord]:
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such records file: {path}")
    types = {f.name: f.type for f in dataclasses.fields(RunRecord)}
    records: list[RunRecord] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != list(RUN_RECORD_FIELDS):
            raise ValidationError(f"unexpected CSV header in {path}")
        for row in reader:
            kwargs = {}
            for name in RUN_RECORD_FIELDS:
                raw = row[name]
                if types[name] == "int":
                    kwargs[name] = int(raw)
                elif types[name] == "float":
                    kwargs[name] = float(raw)
                else:
                    kwargs[name] = raw
            records.append(RunRecord(**kwargs))
    return records
