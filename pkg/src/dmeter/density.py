"""Compactness of embedded data: local KNN density and global points-per-volume.

Per-point KNN density ranks points by mean similarity to their k nearest
neighbors (low values suggest outliers); data_density reports n over the
occupied volume, in raw and log form.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import UndefinedValueError
from .vectors import EmbeddingMatrix

SIMILARITIES = ("cosine", "inverse-euclidean")
VOLUME_MODES = ("bounding-box", "unit-hypercube")

EXACT_SEARCH_CAP = 50_000
_CHUNK_CELLS = 4_000_000  # pairwise-block budget: rows_per_chunk * n floats


@dataclass(frozen=True)
class DensityReport:
    """Per-point and global KNN density, aligned to EmbeddingMatrix labels."""

    global_density: float
    per_point_density: tuple
    params: dict


@dataclass(frozen=True)
class DataDensity:
    """n over occupied volume.  log_density is always finite; density itself
    can overflow or underflow in high dimension and is flagged instead of
    erroring."""

    density: float
    log_density: float
    volume_mode: str
    degenerate_dims: tuple
    flags: tuple


def _similarity_block(block: np.ndarray, all_rows: np.ndarray, similarity: str) -> np.ndarray:
    if similarity == "cosine":
        return block @ all_rows.T
    # inverse-euclidean: 1 / (1 + dist)
    sq = (
        np.sum(block * block, axis=1)[:, None]
        + np.sum(all_rows * all_rows, axis=1)[None, :]
        - 2.0 * (block @ all_rows.T)
    )
    np.maximum(sq, 0.0, out=sq)
    return 1.0 / (1.0 + np.sqrt(sq))


def knn_density(emb: EmbeddingMatrix, k: int, similarity: str = "cosine") -> DensityReport:
    """Mean similarity of each point to its k nearest neighbors (self excluded).

    Neighbors are ranked by the chosen similarity; rank ties break by
    ascending row index so results are deterministic.  Search is exact full
    pairwise, capped at 50,000 points.
    """
    if similarity not in SIMILARITIES:
        raise ValueError(f"unknown similarity {similarity!r}; choose from {SIMILARITIES}")
    n = emb.n
    if n < 2:
        raise ValueError(f"need at least 2 points, got {n}")
    if not 1 <= k <= n - 1:
        raise ValueError(f"k must be in [1, {n - 1}], got {k}")
    if n > EXACT_SEARCH_CAP:
        raise ValueError(
            f"n = {n} exceeds the exact-search cap of {EXACT_SEARCH_CAP}; "
            "sample the matrix down before measuring density"
        )

    rows = emb.matrix
    if similarity == "cosine":
        norms = np.linalg.norm(rows, axis=1)
        zero = np.flatnonzero(norms == 0.0)
        if zero.size:
            raise UndefinedValueError(
                f"cosine similarity undefined for zero-norm row {emb.labels[zero[0]]!r}"
            )
        rows = rows / norms[:, None]

    per_point = np.empty(n, dtype=np.float64)
    chunk = max(1, _CHUNK_CELLS // n)
    for start in range(0, n, chunk):
        stop = min(start + chunk, n)
        sims = _similarity_block(rows[start:stop], rows, similarity)
        if similarity == "cosine":
            np.clip(sims, -1.0, 1.0, out=sims)
        # Descending similarity; stable sort keeps ties in ascending-index order.
        order = np.argsort(-sims, axis=1, kind="stable")
        for local, row_order in enumerate(order):
            i = start + local
            neighbors = row_order[row_order != i][:k]
            per_point[i] = sims[local, neighbors].mean()

    return DensityReport(
        global_density=float(per_point.mean()),
        per_point_density=tuple(float(x) for x in per_point),
        params={"k": k, "similarity": similarity, "n": n},
    )


def data_density(emb: EmbeddingMatrix, volume_mode: str = "bounding-box") -> DataDensity:
    """Points per unit volume.

    bounding-box volume is the product of per-dimension extents; a dimension
    with zero extent (all points equal there) is widened to an epsilon-scaled
    span and flagged rather than collapsing the volume to zero.
    unit-hypercube assumes pre-normalized data and uses volume 1.
    """
    if volume_mode not in VOLUME_MODES:
        raise ValueError(f"unknown volume mode {volume_mode!r}; choose from {VOLUME_MODES}")
    n = emb.n
    if n < 1:
        raise ValueError("need at least 1 point")

    degenerate = []
    flags = []
    if volume_mode == "unit-hypercube":
        log_volume = 0.0
    else:
        los = emb.matrix.min(axis=0)
        his = emb.matrix.max(axis=0)
        extents = his - los
        eps = np.finfo(np.float64).eps
        log_volume = 0.0
        for d in range(emb.dim):
            ext = float(extents[d])
            if ext == 0.0:
                ext = eps * max(1.0, abs(float(his[d])))
                degenerate.append(d)
            log_volume += math.log(ext)
        if degenerate:
            flags.append("degenerate-extent")

    log_density = math.log(n) - log_volume
    if not math.isfinite(log_density):
        raise UndefinedValueError(f"log density is non-finite ({log_density})")
    try:
        density = math.exp(log_density)
    except OverflowError:
        density = math.inf
    if math.isinf(density):
        flags.append("overflow")
    elif density == 0.0:
        flags.append("underflow")

    return DataDensity(
        density=density,
        log_density=log_density,
        volume_mode=volume_mode,
        degenerate_dims=tuple(degenerate),
        flags=tuple(flags),
    )
