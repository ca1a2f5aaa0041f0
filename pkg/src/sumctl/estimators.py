"""Scikit-learn style wrappers around the pipeline's learnable pieces.

Two estimators make the toolkit compose with the wider ecosystem:

* :class:`SemanticGraphBuilder` is a transformer: ``fit`` learns corpus
  document frequencies, ``transform`` turns documents into ranked
  semantic graphs.
* :class:`PromptPolicySummarizer` is a predictor: ``fit`` runs the bandit
  loop to learn the best prompt configuration per text type, ``predict``
  emits summaries with the learned configurations.

Both inherit ``get_params``/``set_params`` from ``BaseEstimator`` and
raise ``NotFittedError`` before fitting.
"""

from __future__ import annotations

import math
from collections import Counter

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .backend import GenerationRequest, SurrogateBackend
from .corpus import CorpusStore, Document, TextType
from .errors import ValidationError
from .metrics import rouge_l
from .optimizer import (
    DEFAULT_EPSILON_END,
    DEFAULT_EPSILON_START,
    RewardWeights,
    TaskSpec,
    multi_task_loss,
    run_episodes,
)
from .prompt import ABSTRACTION_LEVELS, LENGTH_BUDGETS, ObjectiveWeights, render_prompt
from .semgraph import (
    DEFAULT_DAMPING,
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    DEFAULT_TOP_KEYWORDS,
    build_semantic_graph,
)
from .textproc import load_stopwords, normalized_tokens


def as_documents(X) -> list[Document]:
    """Coerce estimator input into Document objects.

    Accepts Documents, raw strings, (text, reference) pairs, or dicts
    with "text"/"reference"/"text_type" keys. Generated ids are
    positional.
    """
    docs: list[Document] = []
    for i, item in enumerate(X):
        if isinstance(item, Document):
            docs.append(item)
        elif isinstance(item, str):
            docs.append(Document(id=f"doc-{i}", text=item))
        elif isinstance(item, tuple) and len(item) == 2:
            docs.append(Document(id=f"doc-{i}", text=item[0], reference=item[1]))
        elif isinstance(item, dict) and "text" in item:
            docs.append(
                Document(
                    id=str(item.get("id", f"doc-{i}")),
                    text=item["text"],
                    reference=item.get("reference"),
                    text_type=TextType(item.get("text_type", "unknown")),
                )
            )
        else:
            raise ValidationError(
                f"cannot interpret input item {i} as a document: {type(item).__name__}"
            )
    if not docs:
        raise ValidationError("estimator input must contain at least one document")
    return docs


class SemanticGraphBuilder(BaseEstimator, TransformerMixin):
    """Transform documents into salience-ranked semantic graphs.

    ``fit`` learns document frequencies for TF-IDF; ``transform`` applies
    them to any documents, fitted or new.
    """

    def __init__(
        self,
        top_keywords=DEFAULT_TOP_KEYWORDS,
        damping=DEFAULT_DAMPING,
        tol=DEFAULT_TOL,
        max_iter=DEFAULT_MAX_ITER,
        stopwords=None,
    ):
        self.top_keywords = top_keywords
        self.damping = damping
        self.tol = tol
        self.max_iter = max_iter
        self.stopwords = stopwords

    def fit(self, X, y=None):
        docs = as_documents(X)
        df: Counter = Counter()
        for doc in docs:
            df.update(set(normalized_tokens(doc.text)))
        self.document_frequencies_ = df
        self.n_documents_ = len(docs)
        self.stopwords_ = frozenset(self.stopwords) if self.stopwords else load_stopwords()
        return self

    def _weights(self, doc: Document) -> dict[str, float]:
        terms = normalized_tokens(doc.text)
        counts = Counter(terms)
        total = len(terms)
        weights: dict[str, float] = {}
        for term, count in counts.items():
            if term in self.stopwords_:
                weights[term] = 0.0
                continue
            idf = math.log((1 + self.n_documents_) / (1 + self.document_frequencies_[term])) + 1.0
            weights[term] = (count / total) * idf
        return weights

    def transform(self, X):
        if not hasattr(self, "n_documents_"):
            raise NotFittedError("SemanticGraphBuilder must be fitted before transform")
        docs = as_documents(X)
        return [
            build_semantic_graph(
                doc,
                self._weights(doc),
                top_keywords=self.top_keywords,
                damping=self.damping,
                tol=self.tol,
                max_iter=self.max_iter,
            )
            for doc in docs
        ]


class PromptPolicySummarizer(BaseEstimator):
    """Learn the best prompt configuration per text type, then summarize.

    ``fit`` runs the epsilon-greedy bandit over the prompt grid against
    the supplied references; ``predict`` renders each document's learned
    best configuration and generates with the (default surrogate)
    backend. ``score`` returns mean ROUGE-L F1 against references.
    """

    def __init__(
        self,
        episodes=300,
        seed=0,
        target_abstraction=4,
        templates=("concise", "detailed", "structured"),
        length_budgets=LENGTH_BUDGETS,
        abstraction_levels=ABSTRACTION_LEVELS,
        epsilon_start=DEFAULT_EPSILON_START,
        epsilon_end=DEFAULT_EPSILON_END,
        backend=None,
        objective_weights=(0.5, 0.3, 0.2),
        reward_weights=(0.5, 0.3, 0.2),
        max_output_tokens=256,
    ):
        self.episodes = episodes
        self.seed = seed
        self.target_abstraction = target_abstraction
        self.templates = templates
        self.length_budgets = length_budgets
        self.abstraction_levels = abstraction_levels
        self.epsilon_start = epsilon_start
        self.epsilon_end = epsilon_end
        self.backend = backend
        self.objective_weights = objective_weights
        self.reward_weights = reward_weights
        self.max_output_tokens = max_output_tokens

    def _merge_references(self, docs: list[Document], y) -> list[Document]:
        if y is None:
            return docs
        refs = list(y)
        if len(refs) != len(docs):
            raise ValidationError(f"y has {len(refs)} references for {len(docs)} documents")
        merged = []
        for doc, ref in zip(docs, refs):
            merged.append(
                Document(id=doc.id, text=doc.text, reference=ref, text_type=doc.text_type)
            )
        return merged

    def fit(self, X, y=None):
        docs = self._merge_references(as_documents(X), y)
        missing = [d.id for d in docs if not d.reference]
        if missing:
            raise ValidationError(f"fit needs a reference for every document; missing: {missing}")
        store = CorpusStore(documents=docs)
        types = sorted({d.text_type for d in docs}, key=lambda t: t.value)
        weight = 1.0 / len(types)
        lambdas = [weight] * len(types)
        lambdas[-1] = 1.0 - weight * (len(types) - 1)  # exact sum despite rounding
        tasks = [
            TaskSpec(
                task_id=f"type-{t.value}",
                text_type=t,
                lambda_k=lam,
                target_abstraction=self.target_abstraction,
            )
            for t, lam in zip(types, lambdas)
        ]
        backend = self.backend or SurrogateBackend()
        self.states_, self.trace_ = run_episodes(
            store,
            tasks,
            backend,
            episodes=self.episodes,
            seed=self.seed,
            templates=self.templates,
            budgets=self.length_budgets,
            levels=self.abstraction_levels,
            objective_weights=ObjectiveWeights(*self.objective_weights),
            reward_weights=RewardWeights(*self.reward_weights),
            epsilon_start=self.epsilon_start,
            epsilon_end=self.epsilon_end,
            max_output_tokens=self.max_output_tokens,
        )
        self.tasks_ = tasks
        self.loss_ = multi_task_loss(self.states_, tasks)
        self.best_config_ = {
            task.text_type: self.states_[task.task_id].arms[self.states_[task.task_id].best_arm()]
            for task in tasks
        }
        self.graph_builder_ = SemanticGraphBuilder().fit(docs)
        return self

    def _check_fitted(self):
        if not hasattr(self, "best_config_"):
            raise NotFittedError("PromptPolicySummarizer must be fitted before use")

    def predict(self, X) -> list[str]:
        self._check_fitted()
        docs = as_documents(X)
        backend = self.backend or SurrogateBackend()
        fallback = next(iter(self.best_config_.values()))
        out: list[str] = []
        for doc, graph in zip(docs, self.graph_builder_.transform(docs)):
            config = self.best_config_.get(doc.text_type, fallback)
            rendered = render_prompt(config, graph)
            request = GenerationRequest(
                prompt=rendered,
                source_text=doc.text,
                max_output_tokens=self.max_output_tokens,
            )
            out.append(backend.generate(request, graph).text)
        return out

    def score(self, X, y) -> float:
        """Mean ROUGE-L F1 of predicted summaries against references."""
        self._check_fitted()
        refs = list(y)
        predictions = self.predict(X)
        if len(refs) != len(predictions):
            raise ValidationError("score needs one reference per document")
        return sum(rouge_l(p, r)[2] for p, r in zip(predictions, refs)) / len(refs)
