"""Semantic graph construction and salience ranking.

A document becomes a graph of entity, keyword, and sentence nodes.
Content nodes (entities and keywords) are linked when they co-occur in a
sentence; sentence nodes link to the content they contain and to their
neighbors. Node salience comes from damped power iteration over the
content subgraph, the standard centrality recipe.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

import numpy as np

from .corpus import Document, TextType
from .errors import ConvergenceError, ValidationError
from .textproc import extract_entities, split_sentences, tfidf_weights

DEFAULT_DAMPING = 0.85
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITER = 200
DEFAULT_TOP_KEYWORDS = 20


class NodeKind(str, Enum):
    ENTITY = "entity"
    KEYWORD = "keyword"
    SENTENCE = "sentence"


@dataclass(frozen=True)
class Node:
    surface: str
    kind: NodeKind
    salience: float = 0.0
    # first occurrence offset in the document, used for deterministic tie-breaks
    position: int = 0


@dataclass(frozen=True)
class SemanticGraph:
    nodes: tuple[Node, ...]
    edges: tuple[tuple[int, int, float], ...]
    doc_id: str = ""
    text_type: TextType = TextType.UNKNOWN

    def __post_init__(self):
        n = len(self.nodes)
        seen: set[tuple[int, int]] = set()
        for i, j, w in self.edges:
            if i == j:
                raise ValidationError(f"self-loop on node {i}")
            if not (0 <= i < n and 0 <= j < n):
                raise ValidationError(f"edge ({i}, {j}) has an invalid endpoint")
            if w <= 0:
                raise ValidationError(f"edge ({i}, {j}) has non-positive weight {w}")
            key = (min(i, j), max(i, j))
            if key in seen:
                raise ValidationError(f"duplicate edge between {key[0]} and {key[1]}")
            seen.add(key)

    @property
    def content_indices(self) -> list[int]:
        return [i for i, node in enumerate(self.nodes) if node.kind is not NodeKind.SENTENCE]

    @property
    def sentence_indices(self) -> list[int]:
        return [i for i, node in enumerate(self.nodes) if node.kind is NodeKind.SENTENCE]

    def to_dict(self) -> dict:
        """JSON-friendly dump for the CLI's graph debugging flag."""
        return {
            "doc_id": self.doc_id,
            "text_type": self.text_type.value,
            "nodes": [
                {"surface": n.surface, "kind": n.kind.value, "salience": n.salience}
                for n in self.nodes
            ],
            "edges": [[i, j, w] for i, j, w in self.edges],
        }


def build_semantic_graph(
    doc: Document,
    tfidf: dict[str, float] | None = None,
    top_keywords: int = DEFAULT_TOP_KEYWORDS,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SemanticGraph:
    """Build and rank the semantic graph for one document.

    Nodes: deduplicated entity mentions, the ``top_keywords`` highest
    TF-IDF terms not already covered by an entity, and one node per
    sentence. Edges: content-content weighted by sentence co-occurrence,
    sentence-content weight 1, adjacent sentences weight 0.5.

    ``tfidf`` is the per-term weight map for this document; when omitted
    it is computed treating the document as a single-item corpus.
    """
    if not doc.text.strip():
        raise ValidationError(f"document {doc.id!r} has empty text")
    if tfidf is None:
        tfidf = tfidf_weights([doc])[doc.id]

    sentences = split_sentences(doc.text)
    mentions = extract_entities(sentences)

    # entity nodes in first-appearance order, with their sentence memberships
    entity_sentences: dict[str, set[int]] = {}
    entity_position: dict[str, int] = {}
    for mention in mentions:
        sent = sentences[mention.sentence_index]
        entity_sentences.setdefault(mention.surface, set()).add(mention.sentence_index)
        if mention.surface not in entity_position:
            offset = sent.text.find(mention.surface)
            entity_position[mention.surface] = sent.span[0] + max(offset, 0)

    entity_token_forms: set[str] = set()
    for surface in entity_sentences:
        for chunk in surface.split():
            form = "".join(ch for ch in chunk.lower() if ch.isalnum())
            if form:
                entity_token_forms.add(form)

    # term -> sentences containing it, and first occurrence offset
    term_sentences: dict[str, set[int]] = {}
    term_position: dict[str, int] = {}
    for sent in sentences:
        for tok in sent.tokens:
            if not tok.normalized:
                continue
            term_sentences.setdefault(tok.normalized, set()).add(sent.index)
            if tok.normalized not in term_position:
                term_position[tok.normalized] = tok.span[0]

    candidates = [
        (term, weight)
        for term, weight in tfidf.items()
        if weight > 0 and term not in entity_token_forms and term in term_sentences
    ]
    candidates.sort(key=lambda item: (-item[1], term_position[item[0]], item[0]))
    keywords = [term for term, _ in candidates[:top_keywords]]

    nodes: list[Node] = []
    membership: list[set[int]] = []
    for surface in entity_sentences:
        nodes.append(Node(surface=surface, kind=NodeKind.ENTITY, position=entity_position[surface]))
        membership.append(entity_sentences[surface])
    for term in keywords:
        nodes.append(Node(surface=term, kind=NodeKind.KEYWORD, position=term_position[term]))
        membership.append(term_sentences[term])

    n_content = len(nodes)
    for sent in sentences:
        nodes.append(Node(surface=f"S{sent.index}", kind=NodeKind.SENTENCE, position=sent.span[0]))

    edges: list[tuple[int, int, float]] = []
    for i in range(n_content):
        for j in range(i + 1, n_content):
            shared = len(membership[i] & membership[j])
            if shared > 0:
                edges.append((i, j, float(shared)))
    for i in range(n_content):
        for sent_index in sorted(membership[i]):
            edges.append((i, n_content + sent_index, 1.0))
    for sent_index in range(len(sentences) - 1):
        edges.append((n_content + sent_index, n_content + sent_index + 1, 0.5))

    graph = SemanticGraph(
        nodes=tuple(nodes), edges=tuple(edges), doc_id=doc.id, text_type=doc.text_type
    )
    return rank_salience(graph, damping=damping, tol=tol, max_iter=max_iter)


def rank_salience(
    graph: SemanticGraph,
    damping: float = DEFAULT_DAMPING,
    tol: float = DEFAULT_TOL,
    max_iter: int = DEFAULT_MAX_ITER,
) -> SemanticGraph:
    """Recompute node salience by damped power iteration.

    Iterates ``s <- (1-d)/n + d * W_norm^T s`` over the row-normalized
    weighted adjacency of the content subgraph until the L1 change drops
    below ``tol``; isolated content nodes keep the uniform teleport mass.
    Content salience is normalized to sum to 1, and each sentence node
    receives the sum of its contained content saliences.
    """
    content = graph.content_indices
    n = len(content)
    if n == 0:
        new_nodes = tuple(replace(node, salience=0.0) for node in graph.nodes)
        return replace(graph, nodes=new_nodes)

    pos = {node_index: k for k, node_index in enumerate(content)}
    weights = np.zeros((n, n))
    for i, j, w in graph.edges:
        if i in pos and j in pos:
            weights[pos[i], pos[j]] = w
            weights[pos[j], pos[i]] = w

    row_sums = weights.sum(axis=1)
    transition = np.divide(
        weights, row_sums[:, None], out=np.zeros_like(weights), where=row_sums[:, None] > 0
    )

    scores = np.full(n, 1.0 / n)
    teleport = (1.0 - damping) / n
    residual = float("inf")
    for _ in range(max_iter):
        updated = teleport + damping * (transition.T @ scores)
        residual = float(np.abs(updated - scores).sum())
        scores = updated
        if residual < tol:
            break
    else:
        raise ConvergenceError(
            f"salience did not converge within {max_iter} iterations (residual {residual:.3e})",
            residual=residual,
        )
    scores = scores / scores.sum()

    salience = {node_index: float(scores[k]) for node_index, k in pos.items()}
    sentence_salience: dict[int, float] = {i: 0.0 for i in graph.sentence_indices}
    for i, j, _ in graph.edges:
        if i in salience and j in sentence_salience:
            sentence_salience[j] += salience[i]
        elif j in salience and i in sentence_salience:
            sentence_salience[i] += salience[j]

    new_nodes = []
    for index, node in enumerate(graph.nodes):
        if index in salience:
            new_nodes.append(replace(node, salience=salience[index]))
        else:
            new_nodes.append(replace(node, salience=sentence_salience[index]))
    return replace(graph, nodes=tuple(new_nodes))


def top_content(graph: SemanticGraph, k: int) -> list[tuple[str, float]]:
    """The k most salient content nodes as (surface, salience) pairs.

    Ties break toward the earlier first occurrence in the document, then
    lexicographically; ``k`` beyond the available nodes returns them all.
    """
    if k < 0:
        raise ValidationError(f"k must be >= 0, got {k}")
    content = [graph.nodes[i] for i in graph.content_indices]
    content.sort(key=lambda node: (-node.salience, node.position, node.surface))
    return [(node.surface, node.salience) for node in content[:k]]
