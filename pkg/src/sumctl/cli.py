"""The ``sumctl`` command line: ingest corpora, summarize documents,
evaluate summary pairs, run sweeps, optimize prompt policies, and render
reports.

Exit codes: 0 success, 1 validation/usage error, 2 runtime or backend
failure. ``--config FILE`` (JSON) supplies defaults for any flag by its
long name.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment
from .backend import GenerationRequest, HttpBackend, SurrogateBackend
from .corpus import CorpusStore, TextType, ingest_jsonl, ingest_textdir, load_mini_corpus
from .errors import SumctlError, SweepError, ValidationError
from .metrics import evaluate_pair
from .optimizer import TaskSpec, multi_task_loss, run_episodes
from .prompt import PromptConfig, render_prompt
from .semgraph import build_semantic_graph
from .textproc import load_stopwords, tfidf_weights

log = logging.getLogger("sumctl.cli")


def _load_store(args) -> CorpusStore:
    if getattr(args, "mini", False):
        return load_mini_corpus()
    if getattr(args, "store", None):
        return CorpusStore.load(args.store)
    raise ValidationError("provide --store DIR or --mini")


def _make_backend(args):
    if args.backend == "surrogate":
        return SurrogateBackend()
    if not args.base_url:
        raise ValidationError("the http backend requires --base-url")
    return HttpBackend(base_url=args.base_url, model=args.model)


def _parse_grid(axis: str, raw: str | None):
    if raw is None:
        defaults = {
            "prompt_length": [str(v) for v in experiment.LENGTH_BUDGETS],
            "noise": [str(v) for v in experiment.DEFAULT_NOISE_GRID],
            "text_type": [t.value for t in TextType if t is not TextType.UNKNOWN],
        }
        parts = defaults[axis]
    else:
        parts = [p.strip() for p in str(raw).split(",") if p.strip()]
    if axis == "prompt_length":
        return [int(p) for p in parts]
    if axis == "noise":
        return [float(p) for p in parts]
    return parts


def cmd_ingest(args) -> int:
    if bool(args.jsonl) == bool(args.textdir):
        raise ValidationError("provide exactly one of --jsonl or --textdir")
    if args.jsonl:
        store = ingest_jsonl(args.jsonl, default_type=args.text_type)
    else:
        store = ingest_textdir(args.textdir, text_type=args.text_type)
    store.save(args.out)
    print(f"ingested {len(store)} documents into {args.out}")
    return 0


def cmd_summarize(args) -> int:
    if args.text:
        text = Path(args.text).read_text("utf-8")
        from .corpus import Document

        doc = Document(id=Path(args.text).stem, text=text, text_type=args.style or "unknown")
        documents = [doc]
    else:
        store = _load_store(args)
        doc = store.get(args.doc)
        documents = list(store)
    stopwords = load_stopwords(args.stopwords) if args.stopwords else None
    weights = tfidf_weights(documents, stopwords=stopwords)
    graph = build_semantic_graph(doc, weights[doc.id])
    config = PromptConfig(
        template_id=args.template,
        length_budget=args.length,
        abstraction_level=args.abstraction,
        style_tag=args.style or doc.text_type,
    )
    prompt = render_prompt(config, graph, template_dir=args.templates)
    if args.dump_graph:
        Path(args.dump_graph).write_text(json.dumps(graph.to_dict(), indent=2), encoding="utf-8")
        log.info("graph dumped to %s", args.dump_graph)
    backend = _make_backend(args)
    request = GenerationRequest(
        prompt=prompt, source_text=doc.text, max_output_tokens=args.max_tokens
    )
    summary = backend.generate(request, graph)
    log.info("prompt (%d tokens): %s", prompt.token_count, prompt.text)
    print(summary.text)
    return 0


def cmd_eval(args) -> int:
    pred = Path(args.pred).read_text("utf-8")
    ref = Path(args.ref).read_text("utf-8")
    report = evaluate_pair(pred, ref)
    print("# ROUGE values are F1 over lowercased tokens without punctuation")
    for name, value in (
        ("rouge1_f1", report.rouge1_f1),
        ("rouge2_f1", report.rouge2_f1),
        ("rougeL_f1", report.rougeL_f1),
        ("bleu", report.bleu),
        ("ter", report.ter),
    ):
        print(f"{name}: {value:.4f}")
    return 0


def cmd_sweep(args) -> int:
    store = _load_store(args)
    grid = _parse_grid(args.axis, args.grid)
    overrides = {
        "template_id": args.template,
        "abstraction_level": args.abstraction,
        "style_tag": args.style,
        "prompt_length": args.length,
        "noise_level": args.noise_level,
    }
    if args.noise_ops:
        overrides["noise_operations"] = tuple(p.strip() for p in args.noise_ops.split(","))
    config = experiment.SweepConfig.with_defaults(
        axis=args.axis, grid=grid, seed=args.seed, output=Path(args.out), **overrides
    )
    backend = _make_backend(args)
    out = Path(args.out)
    try:
        records = experiment.run_sweep(config, backend, store, workers=args.workers)
    except SweepError as exc:
        # keep whatever finished, then fail loudly
        experiment.write_records_csv(exc.records, out / "records.csv")
        print(f"error: {exc}", file=sys.stderr)
        return 2
    csv_path = experiment.write_records_csv(records, out / "records.csv")
    aggregates = experiment.aggregate(records, config.axis, config.fixed["metrics"])
    markdown = experiment.report(aggregates, axis_label=config.axis.value)
    report_path = out / "report.md"
    report_path.write_text(markdown, encoding="utf-8")
    print(f"wrote {len(records)} records to {csv_path}")
    print(f"wrote report to {report_path}")
    return 0


def cmd_optimize(args) -> int:
    store = _load_store(args)
    if args.types:
        types = [TextType(t.strip()) for t in args.types.split(",")]
    else:
        types = sorted(
            {d.text_type for d in store if d.reference}, key=lambda t: t.value
        )
    if not types:
        raise ValidationError("no documents with references to optimize on")
    weight = 1.0 / len(types)
    lambdas = [weight] * len(types)
    lambdas[-1] = 1.0 - weight * (len(types) - 1)
    tasks = [
        TaskSpec(
            task_id=f"type-{t.value}",
            text_type=t,
            lambda_k=lam,
            target_abstraction=args.abstraction,
        )
        for t, lam in zip(types, lambdas)
    ]
    backend = _make_backend(args)
    states, trace = run_episodes(
        store, tasks, backend, episodes=args.episodes, seed=args.seed
    )
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    trace_path = out / "trace.csv"
    with open(trace_path, "w", encoding="utf-8", newline="") as fh:
        import csv as _csv
        import dataclasses as _dc

        fields = [f.name for f in _dc.fields(trace[0])] if trace else []
        writer = _csv.writer(fh, lineterminator="\n")
        writer.writerow(fields)
        for row in trace:
            writer.writerow([getattr(row, name) for name in fields])
    policy_path = out / "policy.json"
    policy_path.write_text(
        json.dumps({task_id: state.to_dict() for task_id, state in states.items()}, indent=2),
        encoding="utf-8",
    )
    total = multi_task_loss(states, tasks)
    print(f"total loss: {total:.4f}")
    for task in tasks:
        state = states[task.task_id]
        best = state.arms[state.best_arm()]
        print(
            f"{task.task_id}: best arm template={best.template_id.value} "
            f"length={best.length_budget} level={best.abstraction_level}"
        )
    print(f"wrote {trace_path} and {policy_path}")
    return 0


def cmd_report(args) -> int:
    records = experiment.read_records_csv(args.records)
    aggregates = experiment.aggregate(records, args.axis)
    markdown = experiment.report(aggregates, axis_label=args.axis)
    Path(args.out).write_text(markdown, encoding="utf-8")
    print(f"wrote report to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed")
    common.add_argument("--config", help="JSON file supplying flag defaults")
    common.add_argument("--verbose", action="store_true", help="log details to stderr")

    parser = argparse.ArgumentParser(
        prog="sumctl",
        description="Controllable summarization: graph-driven prompts, metrics, sweeps.",
    )
    sub = parser.add_subparsers(dest="command", metavar="command")

    p = sub.add_parser("ingest", parents=[common], help="load a dataset into a corpus store")
    p.add_argument("--jsonl", help="JSONL file with article/highlights keys")
    p.add_argument("--textdir", help="directory of *.txt files")
    p.add_argument("--text-type", default="unknown", help="type tag for ingested documents")
    p.add_argument("--out", required=True, help="store directory to create")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("summarize", parents=[common], help="summarize one document")
    p.add_argument("--store", help="corpus store directory")
    p.add_argument("--mini", action="store_true", help="use the bundled mini-corpus")
    p.add_argument("--doc", help="document id within the store")
    p.add_argument("--text", help="summarize a raw text file instead")
    p.add_argument("--template", default="concise", choices=["concise", "detailed", "structured"])
    p.add_argument("--length", type=int, default=40, help="prompt token budget")
    p.add_argument("--abstraction", type=int, default=4, help="abstraction level 1..5")
    p.add_argument("--style", help="style tag (defaults to the document's type)")
    p.add_argument("--backend", default="surrogate", choices=["surrogate", "http"])
    p.add_argument("--base-url", help="chat-completions base URL (http backend)")
    p.add_argument("--model", default="gpt-4o-mini", help="model name (http backend)")
    p.add_argument("--max-tokens", type=int, default=256)
    p.add_argument("--templates", help="directory overriding the bundled prompt templates")
    p.add_argument("--stopwords", help="file overriding the bundled stopword list")
    p.add_argument("--dump-graph", help="write the document graph as JSON here")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("eval", parents=[common], help="score a prediction against a reference")
    p.add_argument("--pred", required=True, help="file with the hypothesis summary")
    p.add_argument("--ref", required=True, help="file with the reference summary")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", parents=[common], help="run a seeded experiment sweep")
    p.add_argument("--store", help="corpus store directory")
    p.add_argument("--mini", action="store_true", help="use the bundled mini-corpus")
    p.add_argument("--axis", required=True, choices=["prompt_length", "noise", "text_type"])
    p.add_argument("--grid", help="comma-separated grid values (axis default otherwise)")
    p.add_argument("--backend", default="surrogate", choices=["surrogate", "http"])
    p.add_argument("--base-url", help="chat-completions base URL (http backend)")
    p.add_argument("--model", default="gpt-4o-mini")
    p.add_argument("--template", default="concise")
    p.add_argument("--length", type=int, default=40, help="fixed prompt budget")
    p.add_argument("--abstraction", type=int, default=4)
    p.add_argument("--style", default="news", help="fixed style tag")
    p.add_argument("--noise-level", type=float, default=0.0, help="fixed noise level")
    p.add_argument("--noise-ops", help="comma-separated noise operations")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--out", default="sweep-out", help="output directory")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", parents=[common], help="learn prompt policies with the bandit")
    p.add_argument("--store", help="corpus store directory")
    p.add_argument("--mini", action="store_true", help="use the bundled mini-corpus")
    p.add_argument("--episodes", type=int, default=300)
    p.add_argument("--types", help="comma-separated text types (default: all present)")
    p.add_argument("--abstraction", type=int, default=4, help="target abstraction level")
    p.add_argument("--backend", default="surrogate", choices=["surrogate", "http"])
    p.add_argument("--base-url", help="chat-completions base URL (http backend)")
    p.add_argument("--model", default="gpt-4o-mini")
    p.add_argument("--out", default="optimize-out", help="output directory")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("report", parents=[common], help="render a Markdown report from records")
    p.add_argument("--records", required=True, help="records.csv from a sweep")
    p.add_argument("--axis", required=True, choices=["prompt_length", "noise", "text_type"])
    p.add_argument("--out", default="report.md")
    p.set_defaults(func=cmd_report)

    return parser


def _config_defaults(argv: list[str]) -> dict:
    path = None
    for i, arg in enumerate(argv):
        if arg == "--config" and i + 1 < len(argv):
            path = argv[i + 1]
        elif arg.startswith("--config="):
            path = arg.split("=", 1)[1]
    if path is None:
        return {}
    try:
        raw = json.loads(Path(path).read_text("utf-8"))
    except FileNotFoundError:
        raise ValidationError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ValidationError(f"config file {path} is not valid JSON: {exc.msg}")
    if not isinstance(raw, dict):
        raise ValidationError(f"config file {path} must hold a JSON object")
    return {key.replace("-", "_"): value for key, value in raw.items()}


def cli(argv: list[str] | None = None) -> int:
    argv = list(argv) if argv is not None else sys.argv[1:]
    parser = build_parser()
    try:
        defaults = _config_defaults(argv)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    if defaults:
        parser.set_defaults(**defaults)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code in (0, None) else 1
    if not getattr(args, "func", None):
        parser.print_usage(sys.stderr)
        return 1
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args) or 0
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SumctlError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(cli())


if __name__ == "__main__":
    main()
