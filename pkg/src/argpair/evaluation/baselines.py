"""Cosine-similarity ranking baselines (no learned parameters, no randomness)."""
from __future__ import annotations

import math
from collections import Counter
from typing import Mapping, Sequence

import numpy as np

from ..corpus.instances import Instance
from ..corpus.text import tokenize
from ..match import RankedCandidates, rank_scores
from .metrics import MetricReport, metrics


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    nu, nv = float(np.linalg.norm(u)), float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(np.dot(u, v) / (nu * nv))


class TfIdf:
    """tf = raw count, idf = ln(N / df) + 1 over a fixed set of documents."""

    def __init__(self, documents: Sequence[str]):
        docs = list(dict.fromkeys(documents))
        self.n_docs = len(docs)
        df: Counter[str] = Counter()
        for d in docs:
            df.update(set(tokenize(d)))
        self.index = {t: i for i, t in enumerate(sorted(df))}
        self.idf = np.array([math.log(self.n_docs / df[t]) + 1.0 for t in sorted(df)])

    def vector(self, text: str) -> np.ndarray:
        v = np.zeros(len(self.index))
        for tok, c in Counter(tokenize(text)).items():
            i = self.index.get(tok)
            if i is not None:
                v[i] = c * self.idf[i]
        return v

    def similarity(self, a: str, b: str) -> float:
        return cosine(self.vector(a), self.vector(b))


def _split_arguments(instances: Sequence[Instance]) -> list[str]:
    texts = []
    for inst in instances:
        texts.append(inst.quotation.text)
        texts.extend(a.text for a in inst.candidates)
    return texts


def tfidf_rankings(instances: Sequence[Instance]) -> list[RankedCandidates]:
    model = TfIdf(_split_arguments(instances))
    return [rank_scores(inst.id, [model.similarity(inst.quotation.text, a.text)
                                  for a in inst.candidates]) for inst in instances]


def tfidf_baseline(instances: Sequence[Instance]) -> MetricReport:
    return metrics(tfidf_rankings(instances))


def centroid(text: str, embeddings: Mapping[str, np.ndarray], dim: int) -> np.ndarray:
    vecs = [embeddings[t] for t in tokenize(text) if t in embeddings]
    return np.mean(vecs, axis=0) if vecs else np.zeros(dim)


def embedding_rankings(instances: Sequence[Instance],
                       embeddings: Mapping[str, np.ndarray]) -> list[RankedCandidates]:
    dim = len(next(iter(embeddings.values()))) if embeddings else 1
    out = []
    for inst in instances:
        q = centroid(inst.quotation.text, embeddings, dim)
        out.append(rank_scores(inst.id, [cosine(q, centroid(a.text, embeddings, dim))
                                         for a in inst.candidates]))
    return out


def embedding_baseline(instances: Sequence[Instance],
                       embeddings: Mapping[str, np.ndarray]) -> MetricReport:
    return metrics(embedding_rankings(instances, embeddings))
