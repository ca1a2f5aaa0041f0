"""sumctl: controllable summarization with semantic-graph prompts,
from-scratch reference metrics, and bandit prompt optimization."""

from .backend import (
    GeneratedSummary,
    GenerationRequest,
    HttpBackend,
    SurrogateBackend,
    generate_http,
    generate_surrogate,
)
from .corpus import (
    CorpusStore,
    Document,
    NoiseOp,
    NoiseSpec,
    TextType,
    apply_noise,
    ingest_jsonl,
    ingest_textdir,
    load_mini_corpus,
)
from .errors import (
    ConfigurationError,
    ConvergenceError,
    GenerationError,
    RequestError,
    SumctlError,
    SweepError,
    TransportError,
    ValidationError,
)
from .estimators import PromptPolicySummarizer, SemanticGraphBuilder
from .experiment import (
    RunRecord,
    SweepAxis,
    SweepConfig,
    aggregate,
    report,
    run_sweep,
)
from .metrics import MetricReport, bleu, evaluate_pair, rouge_l, rouge_n, ter
from .optimizer import (
    PolicyState,
    RewardWeights,
    TaskSpec,
    multi_task_loss,
    reward,
    run_episodes,
    select_arm,
    update,
)
from .prompt import (
    ObjectiveWeights,
    Prompt,
    PromptConfig,
    PromptScore,
    TemplateId,
    enumerate_configs,
    render_prompt,
    score_prompt,
)
from .semgraph import SemanticGraph, build_semantic_graph, rank_salience, top_content
from .textproc import extract_entities, split_sentences, tfidf_weights, tokenize

__version__ = "0.1.0"
