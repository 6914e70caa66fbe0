"""Diversity indices over frequency tables, labeled subsets, and embeddings.

Gini and Shannon indices over any FrequencyTable, the Vendi score (effective
number of distinct items from a similarity kernel's eigenvalue spectrum),
distinct-n lexical diversity, embedding dispersion around the centroid, and
categorical subset diversity over record attributes.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .corpus import Corpus, FrequencyTable
from .errors import KernelInvalidError, UndefinedValueError
from .vectors import EmbeddingMatrix

_SYMMETRY_TOL = 1e-9
_PSD_TOL = 1e-8          # eigenvalues of kernel/n below -this are an error
_EIG_CLAMP = 1e-10       # eigenvalues of kernel/n at or below this count as 0


class SimilarityKernel:
    """Validated n x n similarity matrix: symmetric, unit diagonal, entries in [-1,1]."""

    __slots__ = ("_matrix", "_source")

    def __init__(self, matrix, source: str = "user-defined"):
        matrix = np.asarray(matrix, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise ValueError(f"kernel must be square, got shape {matrix.shape}")
        if matrix.shape[0] < 1:
            raise ValueError("kernel must be at least 1x1")
        asym = float(np.max(np.abs(matrix - matrix.T))) if matrix.size else 0.0
        if asym > _SYMMETRY_TOL:
            raise ValueError(f"kernel asymmetry {asym:.3e} exceeds {_SYMMETRY_TOL}")
        diag_err = float(np.max(np.abs(np.diagonal(matrix) - 1.0)))
        if diag_err > _SYMMETRY_TOL:
            raise ValueError(f"kernel diagonal deviates from 1 by {diag_err:.3e}")
        if float(np.max(np.abs(matrix))) > 1.0 + _SYMMETRY_TOL:
            raise ValueError("kernel entries must lie in [-1, 1]")
        self._matrix = (matrix + matrix.T) / 2.0
        self._source = source

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def source(self) -> str:
        return self._source

    @property
    def n(self) -> int:
        return self._matrix.shape[0]

    def __repr__(self) -> str:
        return f"SimilarityKernel(n={self.n}, source={self._source!r})"


def kernel_from_embeddings(emb: EmbeddingMatrix) -> SimilarityKernel:
    """Cosine-similarity kernel over embedding rows."""
    norms = np.linalg.norm(emb.matrix, axis=1)
    zero = np.flatnonzero(norms == 0.0)
    if zero.size:
        raise UndefinedValueError(
            f"cosine kernel undefined for zero-norm row {emb.labels[zero[0]]!r}"
        )
    unit = emb.matrix / norms[:, None]
    sims = np.clip(unit @ unit.T, -1.0, 1.0)
    np.fill_diagonal(sims, 1.0)
    return SimilarityKernel(sims, source="cosine(embeddings)")


def gini_diversity(ft: FrequencyTable) -> float:
    """1 - sum of squared class proportions; 0 for a pure table."""
    if ft.total < 1:
        raise ValueError("frequency table is empty")
    total = ft.total
    return 1.0 - math.fsum((c / total) ** 2 for c in ft.entries.values())


def shannon_entropy(ft: FrequencyTable) -> float:
    """-sum p ln p in nats, with 0 ln 0 = 0."""
    if ft.total < 1:
        raise ValueError("frequency table is empty")
    total = ft.total
    return -math.fsum((c / total) * math.log(c / total) for c in ft.entries.values())


def vendi_score(kernel: SimilarityKernel | np.ndarray) -> float:
    """Effective number of distinct items: exp of the Shannon entropy of the
    eigenvalues of kernel/n.

    1.0 when all items are identical, n when all are mutually orthogonal.
    The kernel must be positive semidefinite within tolerance; eigenvalues of
    kernel/n below -1e-8 are an error, tiny ones are clamped to zero.
    """
    if not isinstance(kernel, SimilarityKernel):
        kernel = SimilarityKernel(kernel)
    n = kernel.n
    lam = np.linalg.eigvalsh(kernel.matrix) / n
    if lam[0] < -_PSD_TOL:
        raise KernelInvalidError(
            f"kernel is not positive semidefinite: eigenvalue {lam[0] * n:.3e} "
            f"below tolerance -{_PSD_TOL:g} * n"
        )
    lam = np.where(lam <= _EIG_CLAMP, 0.0, lam)
    positive = lam[lam > 0.0]
    entropy = -float(np.sum(positive * np.log(positive)))
    return float(math.exp(entropy))


NGRAM_DENOMINATORS = ("total-ngrams", "vocabulary")


def ngram_diversity(corpus: Corpus, n: int, denominator: str = "total-ngrams") -> float:
    """Distinct n-grams over total n-grams (default), or over vocabulary size."""
    if denominator not in NGRAM_DENOMINATORS:
        raise ValueError(f"unknown denominator {denominator!r}; choose from {NGRAM_DENOMINATORS}")
    counts = corpus.ngram_counts(n)
    if counts.total == 0:
        raise UndefinedValueError(f"corpus has no {n}-grams (all records shorter than {n} tokens)")
    if denominator == "total-ngrams":
        return len(counts) / counts.total
    if not corpus.vocabulary:
        raise UndefinedValueError("corpus has an empty vocabulary")
    return len(counts) / len(corpus.vocabulary)


def embedding_dispersion(emb: EmbeddingMatrix) -> float:
    """Mean euclidean distance of rows to their centroid; 0 iff all rows equal."""
    if emb.n < 2:
        raise ValueError(f"need at least 2 rows, got {emb.n}")
    centroid = emb.matrix.mean(axis=0)
    return float(np.mean(np.linalg.norm(emb.matrix - centroid, axis=1)))


@dataclass(frozen=True)
class SubsetDiversityReport:
    """Label proportions and entropy for one categorical record attribute."""

    attribute: str
    proportions: dict
    entropy: float
    n_labeled: int
    n_unlabeled: int


def subset_diversity(records, attribute: str) -> SubsetDiversityReport:
    """Distribution of an attribute's labels over the records that carry it.

    Unlabeled records are counted separately, never imputed.
    """
    labeled: dict[str, int] = {}
    n_labeled = 0
    n_unlabeled = 0
    for record in records:
        attrs = record.attributes or {}
        if attribute in attrs:
            labeled[attrs[attribute]] = labeled.get(attrs[attribute], 0) + 1
            n_labeled += 1
        else:
            n_unlabeled += 1
    if n_labeled == 0:
        raise ValueError(f"attribute {attribute!r} is absent from all records")
    proportions = {label: count / n_labeled for label, count in sorted(labeled.items())}
    entropy = -math.fsum(p * math.log(p) for p in proportions.values() if p > 0)
    return SubsetDiversityReport(
        attribute=attribute,
        proportions=proportions,
        entropy=entropy,
        n_labeled=n_labeled,
        n_unlabeled=n_unlabeled,
    )
