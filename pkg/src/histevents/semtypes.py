"""Nearest-centroid semantic typing of argument heads over word embeddings."""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .corpus import NE_LABELS, TIMEX_LABELS

log = logging.getLogger(__name__)

OTHER = "OTHER"
OVERRIDE_LABELS = frozenset(NE_LABELS + TIMEX_LABELS)


@dataclass(frozen=True)
class TypedArgument:
    head_lemma: str
    assigned_type: str
    similarity: float | None = None


class CentroidModel:
    def __init__(self, centroids: dict[str, np.ndarray], threshold: float = 0.4):
        if not -1.0 <= threshold <= 1.0:
            raise ValueError(f"threshold must lie in [-1, 1], got {threshold}")
        self.labels = sorted(centroids)
        self.centroids = {l: centroids[l] for l in self.labels}
        self.threshold = threshold
        self.dimension = len(next(iter(centroids.values()))) if centroids else 0
        mat = np.array([centroids[l] for l in self.labels], dtype=np.float64).reshape(len(self.labels), -1)
        self._unit = mat / np.linalg.norm(mat, axis=1, keepdims=True)

    def __len__(self) -> int:
        return len(self.labels)

    def with_threshold(self, threshold: float) -> "CentroidModel":
        return CentroidModel(self.centroids, threshold)

    def similarities(self, vector: np.ndarray) -> np.ndarray | None:
        """Cosine to every centroid (label order), or None for a zero vector."""
        norm = float(np.linalg.norm(vector))
        if norm == 0:
            return None
        return self._unit @ (np.asarray(vector, dtype=np.float64) / norm)

    def rank(self, vector: np.ndarray) -> list[tuple[str, float]]:
        sims = self.similarities(vector)
        if sims is None:
            return []
        pairs = [(l, float(s)) for l, s in zip(self.labels, sims)]
        pairs.sort(key=lambda p: (-p[1], p[0]))
        return pairs

    def dump_tsv(self, path) -> None:
        with open(path, "w", encoding="utf-8") as f:
            for l in self.labels:
                f.write(l + "\t" + "\t".join(repr(float(x)) for x in self.centroids[l]) + "\n")


def build_centroids(types, store, threshold: float = 0.4) -> CentroidModel:
    centroids = {}
    for label in sorted(types.entries):
        vecs = [v for v in (store.get(w) for w in sorted(types.entries[label])) if v is not None]
        if not vecs:
            log.warning("semantic type %s has no in-vocabulary words; dropped", label)
            continue
        c = np.mean(vecs, axis=0)
        if not np.any(c):
            log.warning("semantic type %s has a zero centroid; dropped", label)
            continue
        centroids[label] = c
    if not centroids:
        raise ValueError("no semantic type has an in-vocabulary word")
    log.info("built %d centroids", len(centroids))
    return CentroidModel(centroids, threshold)


def _query_vector(store, head_lemma, surface):
    v = store.get(head_lemma) if head_lemma else None
    if v is None and surface:
        v = store.get(surface)
    return v


def tag_argument(model: CentroidModel, store, head_lemma: str, ne_override: str | None = None,
                 surface: str | None = None) -> TypedArgument:
    if ne_override is not None:
        return TypedArgument(head_lemma, ne_override, None)
    v = _query_vector(store, head_lemma, surface)
    ranked = model.rank(v) if v is not None else []
    if not ranked:
        return TypedArgument(head_lemma, OTHER, None)
    label, sim = ranked[0]
    if sim < model.threshold:
        return TypedArgument(head_lemma, OTHER, sim)
    return TypedArgument(head_lemma, label, sim)


def tag_top_k(model: CentroidModel, store, head_lemma: str, k: int, surface: str | None = None):
    v = _query_vector(store, head_lemma, surface)
    if v is None:
        return []
    return model.rank(v)[:k]
