"""Redundancy counting and readability scoring.

Duplicates are exact groups over raw or normalized record text; redundancy
entropy expresses how evenly records spread over duplicate clusters.
Readability is Flesch reading ease with a deterministic orthographic syllable
heuristic (documented English bias; no dictionary).
"""

from __future__ import annotations

import hashlib
import math
import re
from dataclasses import dataclass

from .corpus import Corpus
from .errors import UndefinedValueError
from .tendency import SummaryStats, summarize

NORMALIZATIONS = ("exact", "fold-and-collapse")


@dataclass(frozen=True)
class RedundancyReport:
    """Duplicate-cluster structure of a corpus under one text normalization."""

    n_records: int
    n_distinct: int
    duplicate_clusters: int
    excess_duplicates: int
    cluster_sizes: tuple          # all cluster sizes, descending
    top_clusters: tuple           # (fingerprint, count, sample text), size >= 2 only
    normalization: str


def _normalize(text: str, normalization: str) -> str:
    if normalization == "exact":
        return text
    return " ".join(text.split()).casefold()


def find_duplicates(corpus: Corpus, normalization: str = "exact", top_cap: int = 10) -> RedundancyReport:
    """Group records by (possibly normalized) text and report the clusters.

    fold-and-collapse case-folds and collapses whitespace runs before
    grouping, so it finds a superset of exact-mode duplicates.  Cluster
    ordering is descending size, then fingerprint.
    """
    if normalization not in NORMALIZATIONS:
        raise ValueError(f"unknown normalization {normalization!r}; choose from {NORMALIZATIONS}")
    if corpus.n_records == 0:
        raise ValueError("corpus is empty")

    groups: dict[str, list] = {}
    for record in corpus.records:
        key = hashlib.sha256(_normalize(record.text, normalization).encode("utf-8")).hexdigest()
        groups.setdefault(key, []).append(record)

    ordered = sorted(groups.items(), key=lambda kv: (-len(kv[1]), kv[0]))
    sizes = tuple(len(members) for _, members in ordered)
    dup = [(fp, len(members), members[0].text) for fp, members in ordered if len(members) >= 2]
    return RedundancyReport(
        n_records=corpus.n_records,
        n_distinct=len(groups),
        duplicate_clusters=len(dup),
        excess_duplicates=corpus.n_records - len(groups),
        cluster_sizes=sizes,
        top_clusters=tuple(dup[:top_cap]),
        normalization=normalization,
    )


def redundancy_entropy(report: RedundancyReport) -> float:
    """Entropy of the cluster-size distribution, normalized to [0, 1].

    1 when every record is unique, falling toward 0 as one cluster absorbs
    the corpus.  A single-record corpus is 1 by convention.
    """
    n = report.n_records
    if n < 1:
        raise ValueError("empty report")
    if n == 1:
        return 1.0
    entropy = -math.fsum((s / n) * math.log(s / n) for s in report.cluster_sizes)
    return entropy / math.log(n)


# --- readability ---------------------------------------------------------------

_WORD_RE = re.compile(r"\w+")
_SENTENCE_SPLIT_RE = re.compile(r"[.!?]+(?:\s+|$)")
_VOWEL_GROUP_RE = re.compile(r"[aeiouy]+")


def count_syllables(word: str) -> int:
    """Vowel-group heuristic: count vowel clusters, drop a silent trailing
    'e', floor at one syllable."""
    w = word.lower()
    groups = len(_VOWEL_GROUP_RE.findall(w))
    if w.endswith("e"):
        groups -= 1
    return max(1, groups)


def _split_sentences(text: str) -> list[str]:
    parts = _SENTENCE_SPLIT_RE.split(text)
    return [p for p in parts if _WORD_RE.search(p)]


def flesch_score(text: str) -> float:
    """Flesch reading ease of one text.

    206.835 - 1.015 * (words / sentences) - 84.6 * (syllables / words), with
    sentences split on ./!/? runs followed by whitespace or end of text, and
    an unterminated trailing segment counting as a sentence when it has words.
    """
    words = _WORD_RE.findall(text)
    if not words:
        raise UndefinedValueError("no words; readability undefined")
    sentences = _split_sentences(text)
    if not sentences:
        raise UndefinedValueError("no sentences; readability undefined")
    syllables = sum(count_syllables(w) for w in words)
    return 206.835 - 1.015 * (len(words) / len(sentences)) - 84.6 * (syllables / len(words))


@dataclass(frozen=True)
class FleschReport:
    """Corpus-level reading-ease summary over per-record scores."""

    stats: SummaryStats
    per_record: dict              # record id -> score
    skipped_ids: tuple            # records with no words/sentences

    @property
    def n_skipped(self) -> int:
        return len(self.skipped_ids)


def flesch_reading_ease(corpus: Corpus) -> FleschReport:
    """Score every record with at least one word and sentence; summarize.

    Records that cannot be scored are listed as skipped, never imputed.
    """
    per_record = {}
    skipped = []
    for record in corpus.records:
        try:
            per_record[record.id] = flesch_score(record.text)
        except UndefinedValueError:
            skipped.append(record.id)
    if not per_record:
        raise UndefinedValueError("no scoreable records in corpus")
    return FleschReport(
        stats=summarize(list(per_record.values())),
        per_record=per_record,
        skipped_ids=tuple(skipped),
    )
