"""Embedding matrices and the fundamental metric-space measurements.

File format: first line "n d" (two integers); then n lines "label v1 ... vd",
whitespace separated.  Labels are free-form strings without whitespace and
typically match record ids.

euclidean() and cosine_similarity() live here because every derived measure
(density, dispersion, Vendi kernels, word mover's distance) builds on them.
"""

from __future__ import annotations

import numpy as np

from .errors import UndefinedValueError


class EmbeddingMatrix:
    """n labeled vectors of equal dimension, stored as float64 rows."""

    __slots__ = ("_labels", "_matrix", "_index")

    def __init__(self, labels, matrix):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2:
            raise ValueError(f"matrix must be 2-D, got shape {matrix.shape}")
        labels = tuple(str(l) for l in labels)
        if len(labels) != matrix.shape[0]:
            raise ValueError(f"{len(labels)} labels for {matrix.shape[0]} rows")
        index = {}
        for i, label in enumerate(labels):
            if label in index:
                raise ValueError(f"duplicate label {label!r}")
            index[label] = i
        if not np.all(np.isfinite(matrix)):
            raise ValueError("matrix contains non-finite values")
        self._labels = labels
        self._matrix = matrix
        self._index = index

    @property
    def labels(self) -> tuple[str, ...]:
        return self._labels

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def n(self) -> int:
        return self._matrix.shape[0]

    @property
    def dim(self) -> int:
        return self._matrix.shape[1]

    def vector(self, label: str) -> np.ndarray:
        return self._matrix[self._index[label]]

    def __contains__(self, label: str) -> bool:
        return label in self._index

    def __len__(self) -> int:
        return self.n

    def subset(self, labels) -> "EmbeddingMatrix":
        """Rows for the given labels, in the given order."""
        labels = [str(l) for l in labels]
        missing = [l for l in labels if l not in self._index]
        if missing:
            raise KeyError(f"labels not present: {missing[:5]}")
        rows = self._matrix[[self._index[l] for l in labels]]
        return EmbeddingMatrix(labels, rows)

    def __repr__(self) -> str:
        return f"EmbeddingMatrix(n={self.n}, dim={self.dim})"


def load_embeddings(source) -> EmbeddingMatrix:
    """Parse the labeled-vector text format from a path or stream."""
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()
    lines = [ln for ln in lines if ln.strip()]
    if not lines:
        raise ValueError("empty embedding file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"header must be 'n d', got {lines[0]!r}")
    try:
        n, d = int(header[0]), int(header[1])
    except ValueError:
        raise ValueError(f"header must be two integers, got {lines[0]!r}") from None
    if n < 0 or d < 1:
        raise ValueError(f"invalid header n={n} d={d}")
    if len(lines) - 1 != n:
        raise ValueError(f"header declares {n} rows, found {len(lines) - 1}")
    labels = []
    matrix = np.empty((n, d), dtype=np.float64)
    for i, line in enumerate(lines[1:], start=2):
        parts = line.split()
        if len(parts) != d + 1:
            raise ValueError(f"line {i}: expected label + {d} values, got {len(parts)} fields")
        labels.append(parts[0])
        try:
            matrix[i - 2] = [float(x) for x in parts[1:]]
        except ValueError as exc:
            raise ValueError(f"line {i}: {exc}") from None
    return EmbeddingMatrix(labels, matrix)


def save_embeddings(emb: EmbeddingMatrix, path) -> None:
    """Write the labeled-vector text format (round-trips with load_embeddings)."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{emb.n} {emb.dim}\n")
        for label, row in zip(emb.labels, emb.matrix):
            fh.write(label + " " + " ".join(f"{v:.17g}" for v in row) + "\n")


def euclidean(u, v) -> float:
    """L2 distance.  Shapes must match."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    return float(np.linalg.norm(u - v))


def cosine_similarity(u, v) -> float:
    """cos of the angle between u and v, clamped to [-1, 1] against rounding.

    A zero-norm input has no direction, so no defined similarity.
    """
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise UndefinedValueError("cosine similarity undefined for zero-norm vector")
    return float(min(1.0, max(-1.0, float(u @ v) / (nu * nv))))


def cosine_distance(u, v) -> float:
    return 1.0 - cosine_similarity(u, v)


def align_to_corpus(emb: EmbeddingMatrix, corpus) -> EmbeddingMatrix:
    """Rows reordered to match corpus record order; every record id must be present."""
    ids = [r.id for r in corpus.records]
    missing = [i for i in ids if i not in emb]
    if missing:
        raise ValueError(
            f"embeddings missing {len(missing)} of {len(ids)} record ids "
            f"(first missing: {missing[:5]})"
        )
    return emb.subset(ids)
