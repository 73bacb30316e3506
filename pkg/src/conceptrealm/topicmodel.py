"""LDA via collapsed Gibbs sampling, fold-in inference and model persistence."""

from __future__ import annotations

import hashlib
import json
import math
import struct
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from . import _gibbs
from .corpus import Document, Vocabulary
from .rng import GENERATOR_NAME, stream

MODEL_FORMAT_VERSION = 1
BINARY_MAGIC = b"CRLM"
BINARY_VERSION = 1
# rows are drawn per document in blocks of this many sweeps; results do not depend on it
_BLOCK = 50


@dataclass(frozen=True)
class LdaConfig:
    n_topics: int
    alpha: float | None = None  # None -> 50 / K
    beta: float = 0.01
    iterations: int = 1000
    burn_in: int = 200
    lag: int = 10
    tfidf_pseudocounts: bool = False

    @property
    def doc_prior(self) -> float:
        return 50.0 / self.n_topics if self.alpha is None else self.alpha


@dataclass(frozen=True)
class LdaModel:
    n_topics: int
    alpha: float
    beta: float
    phi: np.ndarray
    vocabulary: Vocabulary
    seed: int
    config: LdaConfig
    n_samples: int = 0

    def __post_init__(self):
        self.phi.setflags(write=False)

    @property
    def terms(self) -> tuple[str, ...]:
        return self.vocabulary.terms

    @property
    def n_terms(self) -> int:
        return self.phi.shape[1]

    def to_dict(self) -> dict:
        return {
            "format": "conceptrealm-lda",
            "version": MODEL_FORMAT_VERSION,
            "K": self.n_topics,
            "alpha": self.alpha,
            "beta": self.beta,
            "seed": self.seed,
            "generator": GENERATOR_NAME,
            "n_samples": self.n_samples,
            "config": asdict(self.config),
            "vocabulary": self.vocabulary.to_dict(),
            "phi": [[float(x) for x in row] for row in self.phi],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), separators=(",", ":"))

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.to_json().encode("utf-8")).hexdigest()

    @classmethod
    def from_dict(cls, d: dict) -> "LdaModel":
        if d.get("format") != "conceptrealm-lda" or d.get("version") != MODEL_FORMAT_VERSION:
            raise ValueError("not a supported model document")
        return cls(
            n_topics=d["K"],
            alpha=d["alpha"],
            beta=d["beta"],
            phi=np.asarray(d["phi"], dtype=np.float64),
            vocabulary=Vocabulary.from_dict(d["vocabulary"]),
            seed=d["seed"],
            config=LdaConfig(**d["config"]),
            n_samples=d.get("n_samples", 0),
        )


def save_model(model: LdaModel, path: str | Path) -> None:
    Path(path).write_text(model.to_json(), encoding="utf-8")


def load_model(path: str | Path) -> LdaModel:
    return LdaModel.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def phi_to_bytes(phi: np.ndarray) -> bytes:
    """Binary sidecar: magic, version u32, K u32, V u32, then K*V f64, little-endian."""
    K, V = phi.shape
    return BINARY_MAGIC + struct.pack("<III", BINARY_VERSION, K, V) + np.ascontiguousarray(phi, dtype="<f8").tobytes()


def phi_from_bytes(blob: bytes) -> np.ndarray:
    if blob[:4] != BINARY_MAGIC:
        raise ValueError("bad magic")
    version, K, V = struct.unpack("<III", blob[4:16])
    if version != BINARY_VERSION:
        raise ValueError(f"unsupported sidecar version {version}")
    body = blob[16:]
    if len(body) != 8 * K * V:
        raise ValueError("truncated sidecar")
    return np.frombuffer(body, dtype="<f8").reshape(K, V).astype(np.float64)


def sampling_tokens(doc: Document, vocabulary: Vocabulary, tfidf_pseudocounts: bool = False) -> np.ndarray:
    """Token stream fed to the sampler.

    With pseudo-counts each present term is repeated round(tf * idf) times
    (at least once), in vocabulary order.
    """
    if not tfidf_pseudocounts:
        return np.asarray(doc.tokens, dtype=np.int64)
    out = []
    n = vocabulary.n_documents
    for idx, tf in sorted(doc.counts.items()):
        weight = tf * math.log(n / vocabulary.document_frequency[idx])
        out.extend([idx] * max(1, int(round(weight))))
    return np.asarray(out, dtype=np.int64)


def _doc_key(doc: Document) -> tuple[str, str]:
    return (doc.kind, doc.doc_id)


def train_lda(documents: Sequence[Document], vocabulary: Vocabulary, config: LdaConfig, seed: int) -> LdaModel:
    """Train on ``documents`` (any order; sampled in (kind, doc_id) order)."""
    K = config.n_topics
    V = len(vocabulary)
    if K < 1:
        raise ValueError("n_topics must be >= 1")
    docs = sorted(documents, key=_doc_key)
    streams = [sampling_tokens(d, vocabulary, config.tfidf_pseudocounts) for d in docs]
    keep = [i for i, s in enumerate(streams) if len(s)]
    if not keep:
        raise ValueError("cannot train on an empty corpus")
    docs = [docs[i] for i in keep]
    streams = [streams[i] for i in keep]
    tokens = np.concatenate(streams)
    if tokens.max() >= V:
        raise ValueError("document index outside vocabulary")
    distinct = np.unique(tokens).size
    if K > distinct:
        raise ValueError(f"n_topics={K} exceeds the {distinct} distinct terms in the corpus")

    lengths = np.array([len(s) for s in streams])
    offsets = np.concatenate([[0], np.cumsum(lengths)])
    doc_of = np.repeat(np.arange(len(docs)), lengths)
    gens = [stream(seed, "train", d.kind, d.doc_id) for d in docs]

    alpha = config.doc_prior
    beta = config.beta
    z = np.empty(tokens.size, dtype=np.int64)
    for j, g in enumerate(gens):
        z[offsets[j]:offsets[j + 1]] = np.minimum((g.random(lengths[j]) * K).astype(np.int64), K - 1)
    ndk = np.zeros((len(docs), K), dtype=np.int64)
    nkw = np.zeros((K, V), dtype=np.int64)
    nk = np.zeros(K, dtype=np.int64)
    _gibbs.init_counts(tokens, doc_of, z, ndk, nkw, nk)

    phi_acc = np.zeros((K, V))
    n_samples = 0
    u = np.empty((_BLOCK, tokens.size))
    done = 0
    while done < config.iterations:
        block = min(_BLOCK, config.iterations - done)
        for j, g in enumerate(gens):
            u[:block, offsets[j]:offsets[j + 1]] = g.random((block, lengths[j]))
        for b in range(block):
            _gibbs.sweep(tokens, doc_of, z, ndk, nkw, nk, u[b], alpha, beta, V * beta)
            it = done + b + 1
            if it > config.burn_in and (it - config.burn_in) % config.lag == 0:
                phi_acc += (nkw + beta) / (nk + V * beta)[:, None]
                n_samples += 1
        done += block
    if n_samples == 0:
        phi_acc = (nkw + beta) / (nk + V * beta)[:, None]
        n_samples = 1
    phi = phi_acc / phi_acc.sum(axis=1, keepdims=True)
    return LdaModel(K, alpha, beta, phi, vocabulary, seed, config, n_samples)


def infer_document(
    model: LdaModel,
    document: Document,
    fold_in_iterations: int = 50,
    seed: int = 0,
    vocabulary: Vocabulary | None = None,
) -> np.ndarray:
    """Concept weights for one document with the model's phi held fixed.

    Counts are averaged over the second half of the fold-in sweeps, then
    smoothed by alpha and normalized. Empty documents get the uniform vector.
    """
    if vocabulary is not None and vocabulary.terms != model.terms:
        raise ValueError("document vocabulary does not match the model")
    K = model.n_topics
    tokens = sampling_tokens(document, model.vocabulary, model.config.tfidf_pseudocounts)
    if tokens.size and tokens.max() >= model.n_terms:
        raise ValueError("document index outside model vocabulary")
    if tokens.size == 0:
        return np.full(K, 1.0 / K)
    if K == 1:
        return np.ones(1)
    g = stream(seed, "infer", document.kind, document.doc_id)
    u = g.random((fold_in_iterations + 1, tokens.size))
    counts = _gibbs.fold_in(tokens, model.phi, model.alpha, u, fold_in_iterations // 2)
    weights = counts + model.alpha
    return weights / weights.sum()


@dataclass(frozen=True)
class ConceptTermList:
    concept_id: int
    terms: tuple[tuple[str, float], ...] = field(default_factory=tuple)


def top_term_ids(phi_row: np.ndarray, n: int = 10) -> list[int]:
    # stable sort on -p keeps ascending index order among ties
    order = np.argsort(-phi_row, kind="stable")
    return [int(i) for i in order[: min(n, phi_row.size)]]


def top_terms(model: LdaModel, concept_id: int, n: int = 10) -> ConceptTermList:
    if not 0 <= concept_id < model.n_topics:
        raise ValueError(f"concept_id {concept_id} outside [0, {model.n_topics})")
    row = model.phi[concept_id]
    ids = top_term_ids(row, n)
    return ConceptTermList(concept_id, tuple((model.terms[i], float(row[i])) for i in ids))
