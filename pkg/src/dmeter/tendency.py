"""Distribution-shape measurements: summary statistics, burstiness, Zipf-law
fit, and n-gram language-model perplexity.

All logs are natural; entropy-adjacent quantities are in nats.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .corpus import Corpus, FrequencyTable
from .errors import UndefinedValueError

# --- summary statistics -------------------------------------------------------


@dataclass(frozen=True)
class SummaryStats:
    """Central tendency and dispersion of a real-valued sample.

    Fields that need more observations than provided (variance needs 2,
    skewness 3, kurtosis 4) are None.  Skewness/kurtosis are also None for
    zero-variance samples.
    """

    count: int
    mean: float
    median: float
    modes: tuple
    min: float
    max: float
    variance: float | None = None
    std: float | None = None
    skewness: float | None = None
    excess_kurtosis: float | None = None


def summarize(values: Sequence[float]) -> SummaryStats:
    """Standard summary statistics.

    Unbiased variance; adjusted Fisher-Pearson sample skewness; sample excess
    kurtosis; median of an even count is the mean of the middle pair; all
    tied modes are reported, sorted ascending.
    """
    vals = [float(v) for v in values]
    n = len(vals)
    if n == 0:
        raise ValueError("cannot summarize an empty sample")

    vals_sorted = sorted(vals)
    mean = math.fsum(vals) / n
    mid = n // 2
    median = vals_sorted[mid] if n % 2 else (vals_sorted[mid - 1] + vals_sorted[mid]) / 2.0

    counts = Counter(vals)
    top = max(counts.values())
    modes = tuple(sorted(v for v, c in counts.items() if c == top))

    variance = std = skewness = kurtosis = None
    if n >= 2:
        m2 = math.fsum((v - mean) ** 2 for v in vals)
        variance = m2 / (n - 1)
        std = math.sqrt(variance)
        if n >= 3 and variance > 0:
            m3 = math.fsum((v - mean) ** 3 for v in vals)
            g1 = (m3 / n) / (m2 / n) ** 1.5
            skewness = g1 * math.sqrt(n * (n - 1)) / (n - 2)
            if n >= 4:
                m4 = math.fsum((v - mean) ** 4 for v in vals)
                g2 = (m4 / n) / (m2 / n) ** 2 - 3.0
                kurtosis = ((n + 1) * g2 + 6.0) * (n - 1) / ((n - 2) * (n - 3))

    return SummaryStats(
        count=n,
        mean=mean,
        median=median,
        modes=modes,
        min=vals_sorted[0],
        max=vals_sorted[-1],
        variance=variance,
        std=std,
        skewness=skewness,
        excess_kurtosis=kurtosis,
    )


# --- burstiness ---------------------------------------------------------------


def burstiness(gaps: Sequence[float]) -> float:
    """B = (sigma - mu) / (sigma + mu) over inter-event gaps.

    -1 for a perfectly periodic signal, near 0 for Poisson/exponential gaps,
    approaching 1 for extremely bursty ones.  sigma is the population
    standard deviation.
    """
    gaps = np.asarray(list(gaps), dtype=np.float64)
    if gaps.size < 2:
        raise ValueError(f"need at least 2 gaps, got {gaps.size}")
    if np.any(gaps < 0):
        raise ValueError("gaps must be non-negative")
    mu = float(gaps.mean())
    sigma = float(gaps.std())
    if mu == 0.0 and sigma == 0.0:
        raise UndefinedValueError("burstiness undefined for all-zero gaps")
    return (sigma - mu) / (sigma + mu)


def timestamp_gaps(corpus: Corpus) -> list[float]:
    """Inter-event intervals between sorted record timestamps."""
    stamps = sorted(r.timestamp for r in corpus.records if r.timestamp is not None)
    return [float(b - a) for a, b in zip(stamps, stamps[1:])]


def token_recurrence_gaps(corpus: Corpus, token: str) -> list[float]:
    """Gaps between successive occurrences of a token in the concatenated
    record-order token stream."""
    positions = []
    offset = 0
    for toks in corpus.iter_record_tokens():
        for i, t in enumerate(toks):
            if t == token:
                positions.append(offset + i)
        offset += len(toks)
    return [float(b - a) for a, b in zip(positions, positions[1:])]


# --- Zipf fit -----------------------------------------------------------------

ZIPF_METHODS = ("discrete-mle", "loglog-regression")
_ALPHA_FLOOR = 1e-6
_ALPHA_CEIL = 50.0
LOW_CONFIDENCE_RANKS = 10


@dataclass(frozen=True)
class ZipfFit:
    """Fitted rank-frequency power law: frequency proportional to rank^(-alpha)."""

    alpha: float
    ks_distance: float
    n_ranks: int
    fit_method: str
    flags: tuple = ()


def _zipf_cdf(alpha: float, n_ranks: int) -> np.ndarray:
    weights = np.arange(1, n_ranks + 1, dtype=np.float64) ** (-alpha)
    cdf = np.cumsum(weights)
    return cdf / cdf[-1]


def _mle_alpha(counts: np.ndarray) -> tuple[float, bool]:
    """Maximize the rank-distribution likelihood p_r = r^-alpha / H(alpha).

    The score equation is E_alpha[ln r] = (sum c_r ln r) / N; the left side
    decreases monotonically in alpha, so it has a unique root, bracketed on
    [floor, ceil] with boundary clamping.
    """
    ranks = np.arange(1, counts.size + 1, dtype=np.float64)
    log_ranks = np.log(ranks)
    target = float(np.dot(counts, log_ranks) / counts.sum())

    def score(alpha: float) -> float:
        weights = ranks ** (-alpha)
        return float(np.dot(weights, log_ranks) / weights.sum()) - target

    lo, hi = score(_ALPHA_FLOOR), score(_ALPHA_CEIL)
    if lo <= 0.0:
        return _ALPHA_FLOOR, True
    if hi >= 0.0:
        return _ALPHA_CEIL, True
    return float(brentq(score, _ALPHA_FLOOR, _ALPHA_CEIL, xtol=1e-12)), False


def _regression_alpha(counts: np.ndarray) -> tuple[float, bool]:
    ranks = np.arange(1, counts.size + 1, dtype=np.float64)
    slope = np.polyfit(np.log(ranks), np.log(counts), 1)[0]
    alpha = -float(slope)
    if alpha < _ALPHA_FLOOR:
        return _ALPHA_FLOOR, True
    if alpha > _ALPHA_CEIL:
        return _ALPHA_CEIL, True
    return alpha, False


def zipf_fit(ft: FrequencyTable, fit_method: str = "discrete-mle") -> ZipfFit:
    """Fit frequency proportional to rank^(-alpha) over descending-count ranks.

    Reports the fitted exponent and the Kolmogorov-Smirnov distance between
    the observed and fitted rank CDFs.  Fits over fewer than 10 distinct
    items are flagged low-confidence.
    """
    if fit_method not in ZIPF_METHODS:
        raise ValueError(f"unknown fit method {fit_method!r}; choose from {ZIPF_METHODS}")
    if len(ft) < 2:
        raise UndefinedValueError("Zipf fit undefined for fewer than 2 distinct items")

    counts = np.asarray(sorted(ft.entries.values(), reverse=True), dtype=np.float64)
    flags = []
    if counts.size < LOW_CONFIDENCE_RANKS:
        flags.append("low-confidence")

    if fit_method == "discrete-mle":
        alpha, at_boundary = _mle_alpha(counts)
    else:
        alpha, at_boundary = _regression_alpha(counts)
    if at_boundary:
        flags.append("alpha-boundary")

    observed_cdf = np.cumsum(counts) / counts.sum()
    ks = float(np.max(np.abs(observed_cdf - _zipf_cdf(alpha, counts.size))))
    return ZipfFit(
        alpha=alpha,
        ks_distance=ks,
        n_ranks=int(counts.size),
        fit_method=fit_method,
        flags=tuple(flags),
    )


# --- n-gram language model and perplexity --------------------------------------

BOS = "\x02"  # context symbol for a record's first token; never a vocab item
OOV = "\x00"  # explicit out-of-vocabulary bucket


@dataclass(frozen=True)
class NgramLM:
    """Additively smoothed unigram or bigram model with an explicit OOV bucket.

    Conditional probabilities normalize over vocab + OOV (vocab_size + 1
    outcomes), so they sum to 1 per context for any smoothing >= 0.
    """

    order: int
    smoothing: float
    vocab: frozenset
    vocab_size: int
    total_tokens: int
    unigram_counts: dict
    bigram_counts: dict = field(default_factory=dict)
    context_counts: dict = field(default_factory=dict)
    tokenizer_config: object = None

    def prob(self, token: str, context: str | None = None) -> float:
        """p(token | context) for bigram order, p(token) for unigram."""
        alpha = self.smoothing
        bins = self.vocab_size + 1  # vocab plus the OOV bucket
        if token not in self.vocab:
            token = OOV
        if self.order == 1:
            num = self.unigram_counts.get(token, 0) + alpha
            den = self.total_tokens + alpha * bins
        else:
            if context is None:
                raise ValueError("bigram model needs a context token")
            if context != BOS and context not in self.vocab:
                context = OOV
            num = self.bigram_counts.get((context, token), 0) + alpha
            den = self.context_counts.get(context, 0) + alpha * bins
        if den == 0.0:
            return 0.0
        return num / den


def train_lm(corpus: Corpus, order: int = 1, smoothing: float = 1.0) -> NgramLM:
    """Count-based unigram or bigram model over the corpus token stream.

    smoothing = 0 gives the exact MLE (safe only for evaluating the training
    corpus itself); larger values shift mass toward uniform over vocab + OOV.
    """
    if order not in (1, 2):
        raise ValueError(f"order must be 1 or 2, got {order}")
    if smoothing < 0:
        raise ValueError(f"smoothing must be >= 0, got {smoothing}")
    if corpus.n_records == 0:
        raise ValueError("cannot train on an empty corpus")

    unigram = dict(corpus.token_counts.entries)
    bigram: dict = {}
    contexts: dict = {}
    if order == 2:
        for toks in corpus.iter_record_tokens():
            prev = BOS
            for tok in toks:
                bigram[(prev, tok)] = bigram.get((prev, tok), 0) + 1
                contexts[prev] = contexts.get(prev, 0) + 1
                prev = tok
    return NgramLM(
        order=order,
        smoothing=float(smoothing),
        vocab=frozenset(corpus.vocabulary),
        vocab_size=len(corpus.vocabulary),
        total_tokens=corpus.total_tokens,
        unigram_counts=unigram,
        bigram_counts=bigram,
        context_counts=contexts,
        tokenizer_config=corpus.tokenizer_config,
    )


@dataclass(frozen=True)
class PerplexityResult:
    """Corpus perplexity with per-record values for anomaly ranking."""

    perplexity: float
    n_tokens: int
    per_record: dict  # record id -> (perplexity, n_tokens)
    flags: tuple = ()
    provenance: str = "self-contained"


def perplexity(lm: NgramLM, corpus: Corpus) -> PerplexityResult:
    """exp of the mean negative log-probability per token.

    A zero-probability token (smoothing 0 on unseen data) makes the value
    infinite; that is reported as a flagged result, not an exception.
    """
    if lm.tokenizer_config is not None and lm.tokenizer_config != corpus.tokenizer_config:
        raise ValueError(
            f"tokenizer mismatch: model {lm.tokenizer_config} vs corpus {corpus.tokenizer_config}"
        )
    total_logprob = 0.0
    total_tokens = 0
    per_record = {}
    infinite = False
    for record, toks in zip(corpus.records, corpus.iter_record_tokens()):
        if not toks:
            continue
        logprob = 0.0
        prev = BOS
        for tok in toks:
            p = lm.prob(tok, prev) if lm.order == 2 else lm.prob(tok)
            if p <= 0.0:
                logprob = -math.inf
                break
            logprob += math.log(p)
            prev = tok
        n = len(toks)
        record_ppl = math.inf if math.isinf(logprob) else math.exp(-logprob / n)
        if math.isinf(record_ppl):
            infinite = True
        per_record[record.id] = (record_ppl, n)
        total_logprob += logprob
        total_tokens += n
    if total_tokens == 0:
        raise UndefinedValueError("perplexity undefined for a corpus with no tokens")
    value = math.inf if math.isinf(total_logprob) else math.exp(-total_logprob / total_tokens)
    return PerplexityResult(
        perplexity=value,
        n_tokens=total_tokens,
        per_record=per_record,
        flags=("infinite",) if infinite else (),
    )


def perplexity_from_logprobs(source, corpus: Corpus | None = None) -> PerplexityResult:
    """Perplexity from an external model's log-probability file.

    One JSON object per line: {"id": record id, "logprob": total natural-log
    probability of the record, "n_tokens": integer}.  When a corpus is given,
    every line's id must belong to it.
    """
    if hasattr(source, "read"):
        lines = source.read().splitlines()
    else:
        with open(source, "r", encoding="utf-8") as fh:
            lines = fh.read().splitlines()

    known_ids = {r.id for r in corpus.records} if corpus is not None else None
    total_logprob = 0.0
    total_tokens = 0
    per_record = {}
    infinite = False
    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            rid = str(obj["id"])
            logprob = float(obj["logprob"])
            n = int(obj["n_tokens"])
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise ValueError(f"logprob file line {line_no}: {exc}") from None
        if n < 1:
            raise ValueError(f"logprob file line {line_no}: n_tokens must be >= 1")
        if logprob > 0:
            raise ValueError(f"logprob file line {line_no}: logprob must be <= 0")
        if known_ids is not None and rid not in known_ids:
            raise ValueError(f"logprob file line {line_no}: unknown record id {rid!r}")
        record_ppl = math.inf if math.isinf(logprob) else math.exp(-logprob / n)
        if math.isinf(record_ppl):
            infinite = True
        per_record[rid] = (record_ppl, n)
        total_logprob += logprob
        total_tokens += n
    if total_tokens == 0:
        raise UndefinedValueError("logprob file contains no records")
    value = math.inf if math.isinf(total_logprob) else math.exp(-total_logprob / total_tokens)
    return PerplexityResult(
        perplexity=value,
        n_tokens=total_tokens,
        per_record=per_record,
        flags=("infinite",) if infinite else (),
        provenance="external-model",
    )
