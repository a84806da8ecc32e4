"""Retrieval-quality evaluation for parsed and chunked corpora.

Chunks and questions are embedded (hash embedder offline, or a remote
endpoint), ranked by cosine similarity, and scored with recall@k and
NDCG@k against single-passage or page-level relevance annotations.
"""

from __future__ import annotations

import hashlib
import json
import logging
import math
import re
import time
from collections import Counter
import urllib.error
import urllib.request
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from docmill.errors import (
    DimensionMismatch,
    DomainError,
    EmbedderUnreachable,
    MissingPages,
    SchemaViolation,
)

logger = logging.getLogger(__name__)

HASH_EMBEDDER_DIM = 256
REMOTE_RETRIES = 3
_WS = re.compile(r"\s+")
_TOKEN = re.compile(r"[a-z0-9]+")


@dataclass(frozen=True)
class Embedding:
    vector: tuple[float, ...]

    @property
    def norm(self) -> float:
        return math.sqrt(sum(v * v for v in self.vector))

    @property
    def dim(self) -> int:
        return len(self.vector)


@dataclass(frozen=True)
class EvalQuestion:
    id: str
    question: str
    mode: str  # "single" | "multi"
    doc_id: str | None = None
    answer_passage: str | None = None
    relevant_pages: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class ChunkRecord:
    """One line of a chunk JSONL file."""

    text: str
    doc_id: str
    start_page: int | None = None
    end_page: int | None = None


@dataclass(frozen=True)
class RetrievalResult:
    question_id: str
    ranked: tuple[tuple[int, float], ...]  # (chunk index, similarity)
    relevant: tuple[bool, ...]


# -- embedding backends ------------------------------------------------------


def hash_embed(text: str) -> Embedding:
    """Deterministic bag-of-words embedding: tokens hash into a fixed
    256-dim vector which is then L2-normalized. Stable across platforms."""
    vec = [0.0] * HASH_EMBEDDER_DIM
    for token in _TOKEN.findall(text.casefold()):
        digest = hashlib.sha1(token.encode("utf-8")).digest()
        index = int.from_bytes(digest[:4], "big") % HASH_EMBEDDER_DIM
        sign = 1.0 if digest[4] % 2 == 0 else -1.0
        vec[index] += sign
    norm = math.sqrt(sum(v * v for v in vec))
    if norm == 0.0:
        vec[0] = 1.0
        norm = 1.0
    return Embedding(tuple(v / norm for v in vec))


@dataclass
class EmbedderSpec:
    """Either the built-in hasher ("hash") or a remote endpoint URL."""

    backend: str = "hash"
    batch_size: int = 32
    timeout: float = 30.0

    @property
    def is_remote(self) -> bool:
        return self.backend != "hash"

    def fingerprint(self) -> str:
        return f"{self.backend}#batch={self.batch_size}"


def _post_embeddings(url: str, texts: Sequence[str], timeout: float) -> list[list[float]]:
    payload = json.dumps({"input": list(texts)}).encode("utf-8")
    request = urllib.request.Request(
        url, data=payload, headers={"Content-Type": "application/json"}
    )
    with urllib.request.urlopen(request, timeout=timeout) as response:
        body = json.loads(response.read().decode("utf-8"))
    data = body.get("data")
    if not isinstance(data, list) or len(data) != len(texts):
        raise EmbedderUnreachable("endpoint returned a malformed embedding batch")
    return [row["embedding"] for row in data]


def embed_texts(
    texts: Sequence[str],
    spec: EmbedderSpec | None = None,
    cache: "EmbeddingCache | None" = None,
) -> list[Embedding]:
    """Embed texts in order. Remote batches retry transient failures up to
    three times with backoff; a cache, when given, is consulted first and
    extended as batches complete so an aborted run can resume."""
    spec = spec or EmbedderSpec()
    if not spec.is_remote:
        return [_cached(cache, t, hash_embed) for t in texts]

    out: list[Embedding | None] = [None] * len(texts)
    pending: list[int] = []
    for i, text in enumerate(texts):
        hit = cache.get(text) if cache is not None else None
        if hit is not None:
            out[i] = hit
        else:
            pending.append(i)

    for batch_start in range(0, len(pending), spec.batch_size):
        batch = pending[batch_start : batch_start + spec.batch_size]
        batch_texts = [texts[i] for i in batch]
        vectors = _embed_batch_with_retry(spec, batch_texts)
        for i, vec in zip(batch, vectors):
            emb = Embedding(tuple(float(v) for v in vec))
            out[i] = emb
            if cache is not None:
                cache.put(texts[i], emb)

    embeddings = [e for e in out if e is not None]
    dims = {e.dim for e in embeddings}
    if len(dims) > 1:
        raise DimensionMismatch(f"mixed embedding dimensions: {sorted(dims)}")
    return embeddings


def _cached(cache: "EmbeddingCache | None", text: str, fn: Callable[[str], Embedding]) -> Embedding:
    if cache is not None:
        hit = cache.get(text)
        if hit is not None:
            return hit
    emb = fn(text)
    if cache is not None:
        cache.put(text, emb)
    return emb


def _embed_batch_with_retry(spec: EmbedderSpec, texts: Sequence[str]) -> list[list[float]]:
    delay = 0.5
    last_error: Exception | None = None
    for attempt in range(REMOTE_RETRIES):
        try:
            return _post_embeddings(spec.backend, texts, spec.timeout)
        except (urllib.error.URLError, TimeoutError, OSError, json.JSONDecodeError, KeyError) as exc:
            last_error = exc
            logger.warning("embedding batch failed (attempt %d): %s", attempt + 1, exc)
            if attempt + 1 < REMOTE_RETRIES:
                time.sleep(delay)
                delay *= 2
    raise EmbedderUnreachable(f"embedder failed after {REMOTE_RETRIES} attempts: {last_error}")


class EmbeddingCache:
    """Append-only JSONL cache keyed by text digest; safe to resume."""

    def __init__(self, path: str | Path) -> None:
        self.path = Path(path)
        self._mem: dict[str, Embedding] = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if not line.strip():
                    continue
                try:
                    row = json.loads(line)
                    self._mem[row["key"]] = Embedding(tuple(row["vector"]))
                except (json.JSONDecodeError, KeyError, TypeError):
                    continue

    @staticmethod
    def _key(text: str) -> str:
        return hashlib.sha256(text.encode("utf-8")).hexdigest()

    def get(self, text: str) -> Embedding | None:
        return self._mem.get(self._key(text))

    def put(self, text: str, embedding: Embedding) -> None:
        key = self._key(text)
        if key in self._mem:
            return
        self._mem[key] = embedding
        with open(self.path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps({"key": key, "vector": list(embedding.vector)}))
            fh.write("\n")


# -- similarity and ranking ---------------------------------------------------


def cosine(a: Embedding, b: Embedding) -> float:
    if a.dim != b.dim:
        raise DimensionMismatch(f"cosine over dims {a.dim} and {b.dim}")
    av = np.asarray(a.vector)
    bv = np.asarray(b.vector)
    denom = float(np.linalg.norm(av) * np.linalg.norm(bv))
    if denom == 0.0:
        return 0.0
    return float(np.dot(av, bv) / denom)


def retrieve_topk(
    question: Embedding, chunks: Sequence[tuple[int, Embedding]], k: int
) -> list[tuple[int, float]]:
    """Exact top-k by cosine; ties keep earlier-inserted chunks first."""
    if k < 1:
        raise DomainError("k must be >= 1")
    scored = []
    for order, (ref, emb) in enumerate(chunks):
        scored.append((-cosine(question, emb), order, ref))
    scored.sort()
    return [(ref, -neg) for neg, _, ref in scored[:k]]


# -- relevance and metrics ----------------------------------------------------


def _normalize_text(text: str) -> str:
    return _WS.sub(" ", text).strip().casefold()


# share of passage tokens that must appear in the chunk for a fuzzy hit
FUZZY_MIN_TOKEN_OVERLAP = 0.8


def _fuzzy_contains(chunk_text: str, passage: str) -> bool:
    passage_tokens = _TOKEN.findall(passage.casefold())
    if not passage_tokens:
        return False
    available = Counter(_TOKEN.findall(chunk_text.casefold()))
    hit = 0
    for token in passage_tokens:
        if available[token] > 0:
            available[token] -= 1
            hit += 1
    return hit / len(passage_tokens) >= FUZZY_MIN_TOKEN_OVERLAP


def judge_relevance(chunk: ChunkRecord, question: EvalQuestion, fuzzy: bool = False) -> bool:
    """Single mode: the annotated passage occurs in the chunk (normalized
    substring; with ``fuzzy``, token overlap >= 0.8 also counts, for
    parsers that reflow text). Multi mode: the chunk's page interval hits
    an annotated page."""
    if question.mode == "single":
        if chunk.doc_id != question.doc_id:
            return False
        passage = _normalize_text(question.answer_passage or "")
        if not passage:
            return False
        if passage in _normalize_text(chunk.text):
            return True
        return fuzzy and _fuzzy_contains(chunk.text, passage)
    for doc_id, page in question.relevant_pages:
        if chunk.doc_id != doc_id:
            continue
        if chunk.start_page is None or chunk.end_page is None:
            raise MissingPages(
                f"chunk of {chunk.doc_id} lacks page metadata for multi-chunk judging"
            )
        if chunk.start_page <= page <= chunk.end_page:
            return True
    return False


def recall_at_k(relevant_flags: Sequence[bool], total_relevant: int) -> float:
    if total_relevant < 1:
        raise DomainError("total_relevant must be >= 1")
    return sum(relevant_flags) / total_relevant


def ndcg_at_k(relevant_flags: Sequence[bool], total_relevant: int) -> float:
    """Binary-relevance NDCG: DCG = sum(rel_i / log2(i + 1)) over ranks,
    normalized by the ideal ordering's DCG."""
    if total_relevant < 1:
        raise DomainError("total_relevant must be >= 1")
    dcg = sum(
        1.0 / math.log2(rank + 1)
        for rank, flag in enumerate(relevant_flags, start=1)
        if flag
    )
    ideal_hits = min(total_relevant, len(relevant_flags))
    idcg = sum(1.0 / math.log2(rank + 1) for rank in range(1, ideal_hits + 1))
    if dcg == 0.0 or idcg == 0.0:
        return 0.0
    return dcg / idcg


# -- dataset and report -------------------------------------------------------


def load_questions(path: str | Path) -> list[EvalQuestion]:
    """Read the question JSONL: single rows carry doc_id/answer_passage,
    multi rows carry a list of {doc_id, page} annotations."""
    questions = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        where = f"$[{line_no}]"
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(where, f"invalid JSON: {exc}") from exc
        if not isinstance(row, dict) or "id" not in row or "question" not in row:
            raise SchemaViolation(where, "rows need 'id' and 'question'")
        if "relevant" in row:
            pages = []
            for i, item in enumerate(row["relevant"]):
                if "doc_id" not in item or "page" not in item:
                    raise SchemaViolation(
                        f"{where}.relevant[{i}]", "needs 'doc_id' and 'page'"
                    )
                pages.append((str(item["doc_id"]), int(item["page"])))
            if not pages:
                raise SchemaViolation(f"{where}.relevant", "must be non-empty")
            questions.append(
                EvalQuestion(
                    id=str(row["id"]),
                    question=str(row["question"]),
                    mode="multi",
                    relevant_pages=tuple(pages),
                )
            )
        else:
            for key in ("doc_id", "answer_passage"):
                if key not in row:
                    raise SchemaViolation(where, f"single-mode row missing '{key}'")
            questions.append(
                EvalQuestion(
                    id=str(row["id"]),
                    question=str(row["question"]),
                    mode="single",
                    doc_id=str(row["doc_id"]),
                    answer_passage=str(row["answer_passage"]),
                )
            )
    return questions


def load_chunks(path: str | Path) -> list[ChunkRecord]:
    records = []
    for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaViolation(f"$[{line_no}]", f"invalid JSON: {exc}") from exc
        if "text" not in row:
            raise SchemaViolation(f"$[{line_no}]", "chunk row missing 'text'")
        records.append(
            ChunkRecord(
                text=str(row["text"]),
                doc_id=str(row.get("doc_id") or ""),
                start_page=row.get("start_page"),
                end_page=row.get("end_page"),
            )
        )
    return records


@dataclass
class EvalReport:
    k: int
    fingerprint: str
    rows: list[dict] = field(default_factory=list)

    def aggregate(self) -> dict:
        def mean_of(mode: str, key: str) -> float | None:
            values = [
                r[key] for r in self.rows if r[key] is not None and (mode == "all" or r["mode"] == mode)
            ]
            return sum(values) / len(values) if values else None

        return {
            "questions": len(self.rows),
            "mean_recall_at_k": mean_of("all", "recall"),
            "mean_ndcg_at_k": mean_of("all", "ndcg"),
            "single": {
                "mean_recall_at_k": mean_of("single", "recall"),
                "mean_ndcg_at_k": mean_of("single", "ndcg"),
            },
            "multi": {
                "mean_recall_at_k": mean_of("multi", "recall"),
                "mean_ndcg_at_k": mean_of("multi", "ndcg"),
            },
        }

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "fingerprint": self.fingerprint,
            "aggregates": self.aggregate(),
            "per_question": self.rows,
        }


def run_eval(
    dataset_path: str | Path,
    chunks_path: str | Path,
    spec: EmbedderSpec | None = None,
    k: int = 10,
    cache_path: str | Path | None = None,
    fuzzy: bool = False,
) -> EvalReport:
    """Embed the corpus once, retrieve per question, and score by mode.

    Chunks embed with their prepended headers included; the report
    fingerprint records that along with the embedder, k and the fuzzy
    matching flag.
    """
    spec = spec or EmbedderSpec()
    questions = load_questions(dataset_path)
    chunks = load_chunks(chunks_path)
    cache = EmbeddingCache(cache_path) if cache_path is not None else None

    fingerprint_src = json.dumps(
        {
            "embedder": spec.fingerprint(),
            "k": k,
            "chunk_text": "headers_included",
            "fuzzy": fuzzy,
        },
        sort_keys=True,
    )
    fingerprint = hashlib.sha256(fingerprint_src.encode("utf-8")).hexdigest()[:16]
    report = EvalReport(k=k, fingerprint=fingerprint)
    if not questions:
        return report

    chunk_embeddings = embed_texts([c.text for c in chunks], spec, cache)
    question_embeddings = embed_texts([q.question for q in questions], spec, cache)
    if chunks and chunk_embeddings and question_embeddings:
        if chunk_embeddings[0].dim != question_embeddings[0].dim:
            raise DimensionMismatch("question and chunk embedding dimensions differ")
    indexed = list(enumerate(chunk_embeddings))

    for question, q_emb in zip(questions, question_embeddings):
        flags_all = [judge_relevance(chunk, question, fuzzy=fuzzy) for chunk in chunks]
        total_relevant = sum(flags_all)
        top = retrieve_topk(q_emb, indexed, k) if indexed else []
        result = RetrievalResult(
            question_id=question.id,
            ranked=tuple(top),
            relevant=tuple(flags_all[ref] for ref, _ in top),
        )
        if total_relevant < 1:
            logger.warning("question %s has no relevant chunk in the corpus", question.id)
            recall = ndcg = None
        else:
            recall = recall_at_k(result.relevant, total_relevant)
            ndcg = ndcg_at_k(result.relevant, total_relevant)
        report.rows.append(
            {
                "id": question.id,
                "mode": question.mode,
                "recall": recall,
                "ndcg": ndcg,
                "total_relevant": total_relevant,
                "top": [
                    {"chunk": ref, "score": round(score, 6), "relevant": flag}
                    for (ref, score), flag in zip(result.ranked, result.relevant)
                ],
            }
        )
    return report
