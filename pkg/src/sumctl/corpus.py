"""Corpus ingestion, persistence, and seeded noise corruption.

Datasets arrive either as JSONL with "article"/"highlights" keys (the
common news-summarization distribution shape) or as directories of plain
text files. A store persists as one JSONL data file plus a JSON manifest,
both human-inspectable.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterator, Sequence

from .errors import ValidationError


class TextType(str, Enum):
    NEWS = "news"
    BLOG = "blog"
    ACADEMIC = "academic"
    UNKNOWN = "unknown"


def _word_count(text: str) -> int:
    return len(text.split())


@dataclass(frozen=True)
class Document:
    """One source text with an optional gold summary and a type tag."""

    id: str
    text: str
    reference: str | None = None
    text_type: TextType = TextType.UNKNOWN
    word_count: int | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("document id must be nonempty")
        if not isinstance(self.text_type, TextType):
            object.__setattr__(self, "text_type", TextType(self.text_type))
        computed = _word_count(self.text)
        if self.word_count is None:
            object.__setattr__(self, "word_count", computed)
        elif self.word_count != computed:
            raise ValidationError(
                f"document {self.id!r}: stored word_count {self.word_count} "
                f"!= recomputed {computed}"
            )


class NoiseOp(str, Enum):
    CHAR_SWAP = "char_swap"
    TOKEN_DELETE = "token_delete"
    TOKEN_DUPLICATE = "token_duplicate"
    TOKEN_SUBSTITUTE = "token_substitute"


ALL_NOISE_OPS = frozenset(NoiseOp)


@dataclass(frozen=True)
class NoiseSpec:
    """Per-token corruption: probability ``level``, operation set, seed."""

    level: float
    operations: frozenset[NoiseOp] = ALL_NOISE_OPS
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.level <= 1.0:
            raise ValidationError(f"noise level must be in [0, 1], got {self.level}")
        ops = frozenset(NoiseOp(op) for op in self.operations)
        object.__setattr__(self, "operations", ops)
        if self.level > 0 and not ops:
            raise ValidationError("operations must be nonempty when level > 0")
        if not 0 <= self.seed < 2**64:
            raise ValidationError("seed must be a 64-bit unsigned integer")


def apply_noise(
    doc: Document,
    spec: NoiseSpec,
    vocabulary: Sequence[str] | None = None,
) -> Document:
    """Return a copy of ``doc`` with its text corrupted token by token.

    Each whitespace token draws u ~ Uniform[0,1) from a stream seeded with
    ``spec.seed``; tokens with u < level get one operation applied, chosen
    from ``spec.operations``. Operation choices and their parameters draw
    from a second stream derived from the same seed, so the per-token
    threshold draws are identical across levels. The reference and id are
    never touched. Fully deterministic per (doc, spec).

    ``vocabulary`` supplies substitute tokens (normally the corpus
    vocabulary); the document's own tokens are the fallback.
    """
    if not 0.0 <= spec.level <= 1.0:
        raise ValidationError(f"noise level must be in [0, 1], got {spec.level}")
    tokens = doc.text.split()
    if spec.level == 0.0 or not tokens:
        return doc

    u_rng = random.Random(spec.seed)
    op_rng = random.Random(f"{spec.seed}:ops")
    ops = sorted(spec.operations, key=lambda op: op.value)
    substitutes = list(vocabulary) if vocabulary else sorted(set(tokens))

    out: list[str] = []
    for tok in tokens:
        if u_rng.random() >= spec.level:
            out.append(tok)
            continue
        op = ops[op_rng.randrange(len(ops))] if len(ops) > 1 else ops[0]
        if op is NoiseOp.TOKEN_DELETE:
            continue
        if op is NoiseOp.TOKEN_DUPLICATE:
            out.append(tok)
            out.append(tok)
        elif op is NoiseOp.TOKEN_SUBSTITUTE:
            out.append(substitutes[op_rng.randrange(len(substitutes))])
        elif op is NoiseOp.CHAR_SWAP:
            if len(tok) >= 4:
                i = op_rng.randint(1, len(tok) - 3)
                tok = tok[:i] + tok[i + 1] + tok[i] + tok[i + 2 :]
            out.append(tok)
    return replace(doc, text=" ".join(out), word_count=None)


_DATA_FILE = "corpus.jsonl"
_MANIFEST_FILE = "manifest.json"


@dataclass
class CorpusStore:
    """An in-memory corpus with optional on-disk persistence."""

    documents: list[Document] = field(default_factory=list)
    root: Path | None = None

    def __post_init__(self):
        seen: set[str] = set()
        for doc in self.documents:
            if doc.id in seen:
                raise ValidationError(f"duplicate document id {doc.id!r}")
            seen.add(doc.id)
        self._by_id = {doc.id: doc for doc in self.documents}

    def __len__(self) -> int:
        return len(self.documents)

    def __iter__(self) -> Iterator[Document]:
        return iter(self.documents)

    def get(self, doc_id: str) -> Document:
        try:
            return self._by_id[doc_id]
        except KeyError:
            raise ValidationError(f"no document with id {doc_id!r}") from None

    def by_type(self, text_type: TextType | str) -> list[Document]:
        text_type = TextType(text_type)
        return [d for d in self.documents if d.text_type is text_type]

    def vocabulary(self) -> list[str]:
        """Distinct whitespace tokens across all documents, sorted."""
        vocab: set[str] = set()
        for doc in self.documents:
            vocab.update(doc.text.split())
        return sorted(vocab)

    def save(self, root: str | Path) -> Path:
        """Write ``corpus.jsonl`` plus ``manifest.json`` under ``root``."""
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        manifest: dict[str, dict] = {}
        offset = 0
        with open(root / _DATA_FILE, "wb") as fh:
            for doc in self.documents:
                record = {
                    "id": doc.id,
                    "article": doc.text,
                    "highlights": doc.reference,
                    "text_type": doc.text_type.value,
                    "word_count": doc.word_count,
                }
                line = json.dumps(record, ensure_ascii=False).encode("utf-8") + b"\n"
                fh.write(line)
                manifest[doc.id] = {
                    "text_type": doc.text_type.value,
                    "offset": offset,
                    "length": len(line),
                }
                offset += len(line)
        (root / _MANIFEST_FILE).write_text(
            json.dumps({"count": len(self.documents), "documents": manifest}, indent=2),
            encoding="utf-8",
        )
        self.root = root
        return root

    @classmethod
    def load(cls, root: str | Path) -> "CorpusStore":
        root = Path(root)
        manifest_path = root / _MANIFEST_FILE
        data_path = root / _DATA_FILE
        if not manifest_path.is_file() or not data_path.is_file():
            raise ValidationError(f"{root} is not a corpus store (missing manifest or data)")
        manifest = json.loads(manifest_path.read_text("utf-8"))
        blob = data_path.read_bytes()
        documents: list[Document] = []
        for doc_id, entry in manifest["documents"].items():
            chunk = blob[entry["offset"] : entry["offset"] + entry["length"]]
            try:
                record = json.loads(chunk.decode("utf-8"))
            except (UnicodeDecodeError, json.JSONDecodeError) as exc:
                raise ValidationError(f"manifest entry {doc_id!r} does not resolve to a record: {exc}")
            documents.append(
                Document(
                    id=record["id"],
                    text=record["article"],
                    reference=record.get("highlights"),
                    text_type=TextType(record.get("text_type", "unknown")),
                    word_count=record.get("word_count"),
                )
            )
        return cls(documents=documents, root=root)


def ingest_jsonl(path: str | Path, default_type: TextType | str = TextType.UNKNOWN) -> CorpusStore:
    """Load a JSONL corpus: one object per line with "article" and
    "highlights" fields, optional "id" and "text_type".

    A missing id becomes ``doc-{line_number}`` (zero-based). Parsing is
    all-or-nothing: any malformed line aborts with its 1-based number and
    nothing is kept. Blank lines are ignored; a missing "highlights" field
    leaves the reference unset.
    """
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"no such file: {path}")
    default_type = TextType(default_type)

    documents: list[Document] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"{path.name} line {lineno + 1}: invalid JSON ({exc.msg})")
            if not isinstance(record, dict) or "article" not in record:
                raise ValidationError(f"{path.name} line {lineno + 1}: missing 'article' field")
            try:
                text_type = TextType(record.get("text_type", default_type))
            except ValueError:
                raise ValidationError(
                    f"{path.name} line {lineno + 1}: unknown text_type {record['text_type']!r}"
                )
            documents.append(
                Document(
                    id=str(record.get("id") or f"doc-{lineno}"),
                    text=record["article"],
                    reference=record.get("highlights"),
                    text_type=text_type,
                )
            )
    return CorpusStore(documents=documents)


def ingest_textdir(path: str | Path, text_type: TextType | str) -> CorpusStore:
    """Load every ``*.txt`` file under ``path`` as one document.

    Ids are filename stems; references are absent; files must be UTF-8.
    """
    path = Path(path)
    if not path.is_dir():
        raise ValidationError(f"no such directory: {path}")
    text_type = TextType(text_type)

    documents: list[Document] = []
    for txt in sorted(path.glob("*.txt")):
        try:
            content = txt.read_text("utf-8")
        except UnicodeDecodeError:
            raise ValidationError(f"{txt.name} is not valid UTF-8")
        documents.append(Document(id=txt.stem, text=content, text_type=text_type))
    return CorpusStore(documents=documents)


def load_mini_corpus() -> CorpusStore:
    """Load the bundled synthetic mini-corpus (20 hand-written documents,
    five per text type, each with a reference summary)."""
    with resources.as_file(resources.files("sumctl.data").joinpath("minicorpus.jsonl")) as p:
        return ingest_jsonl(p)
