"""Measurement reports and batch-over-batch comparison.

A report is a versioned, deterministically serialized JSON artifact: every
measurement value travels with its generating parameters, unit, flags, and
provenance.  Comparison only computes deltas between entries whose parameters
match exactly; everything else is marked incomparable with a reason.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from datetime import datetime, timezone

from . import density, diversity, quality, tendency
from .corpus import Corpus
from .errors import MeasurementError, UndefinedValueError
from .vectors import EmbeddingMatrix, align_to_corpus

SCHEMA_VERSION = "1.0"

METRIC_FAMILIES = ("tendency", "diversity", "density", "quality")

DEFAULT_CONFIG = {
    "zipf_method": "discrete-mle",
    "lm_order": 1,
    "lm_smoothing": 1.0,
    "burstiness_token": None,
    "diversity_attribute": None,
    "ngram_denominator": "total-ngrams",
    "knn_k": 5,
    "knn_similarity": "cosine",
    "volume_mode": "bounding-box",
    "dedup_top_cap": 10,
    "perplexity_logprobs": None,
    "vendi_cap": 4096,
}

# Flags that make an entry's value unusable for deltas.  Informational flags
# (low-confidence, alpha-boundary, ...) do not block comparison.
_BLOCKING_FLAG_PREFIXES = ("error:", "skipped:")
_BLOCKING_FLAGS = ("infinite", "negative-infinite", "undefined")


@dataclass(frozen=True)
class MeasurementReport:
    schema_version: str
    corpus_fingerprint: str
    tokenizer_config: dict
    created_at: str
    measurements: dict

    def to_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "corpus_fingerprint": self.corpus_fingerprint,
            "tokenizer_config": self.tokenizer_config,
            "created_at": self.created_at,
            "measurements": self.measurements,
        }


def nats_to_bits(value: float) -> float:
    return value / math.log(2.0)


def _default_created_at() -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        moment = datetime.fromtimestamp(int(epoch), tz=timezone.utc)
    else:
        moment = datetime.now(tz=timezone.utc)
    return moment.strftime("%Y-%m-%dT%H:%M:%SZ")


def _stats_dict(stats: tendency.SummaryStats) -> dict:
    return {
        "count": stats.count,
        "mean": stats.mean,
        "median": stats.median,
        "modes": list(stats.modes),
        "min": stats.min,
        "max": stats.max,
        "variance": stats.variance,
        "std": stats.std,
        "skewness": stats.skewness,
        "excess_kurtosis": stats.excess_kurtosis,
    }


def _sanitize(value, flags: list, suffix: str = ""):
    """Replace non-finite floats and None with null + a flag; recurse into dicts."""
    if value is None:
        flags.append(f"undefined{suffix}")
        return None
    if isinstance(value, float):
        if math.isinf(value):
            flags.append(("infinite" if value > 0 else "negative-infinite") + suffix)
            return None
        if math.isnan(value):
            flags.append(f"undefined{suffix}")
            return None
        return value
    if isinstance(value, dict):
        return {k: _sanitize(v, flags, f":{k}") for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        out = []
        for v in value:
            if isinstance(v, float) and not math.isfinite(v):
                flags.append(("infinite" if v > 0 else "undefined") + suffix)
                out.append(None)
            else:
                out.append(v)
        return out
    return value


class _ReportBuilder:
    def __init__(self):
        self.measurements: dict = {}

    def add(self, name, unit, params, compute, provenance="self-contained", extra_flags=()):
        """Run one measurement with failure isolation: any error becomes a
        flagged entry instead of aborting the report."""
        flags = list(extra_flags)
        try:
            value = compute()
        except UndefinedValueError as exc:
            value, note = None, str(exc)
            flags.append("undefined")
        except MeasurementError as exc:
            value, note = None, str(exc)
            flags.append("error:measurement")
        except ValueError as exc:
            value, note = None, str(exc)
            flags.append("error:argument")
        except Exception as exc:  # isolation rule: never abort the report
            value, note = None, str(exc)
            flags.append("error:internal")
        else:
            if isinstance(value, tuple) and len(value) == 2 and isinstance(value[1], (list, tuple)):
                value, more = value
                flags.extend(more)
            note = None
            value = _sanitize(value, flags)
        entry = {
            "value": value,
            "unit": unit,
            "params": params,
            "flags": sorted(set(flags)),
            "provenance": provenance,
        }
        if note:
            entry["note"] = note
        self.measurements[name] = entry

    def skip(self, name, unit, params, reason, provenance="self-contained"):
        self.measurements[name] = {
            "value": None,
            "unit": unit,
            "params": params,
            "flags": [f"skipped:{reason}"],
            "provenance": provenance,
        }


def _add_tendency(b: _ReportBuilder, corpus: Corpus, cfg: dict, tok: dict) -> None:
    b.add(
        "record_length_tokens",
        "tokens/record",
        {"tokenizer": tok},
        lambda: _stats_dict(tendency.summarize([len(t) for t in corpus.iter_record_tokens()])),
    )
    b.add(
        "token_count_stats",
        "count/type",
        {"tokenizer": tok},
        lambda: _stats_dict(tendency.summarize(list(corpus.token_counts.entries.values()))),
    )

    def _zipf():
        fit = tendency.zipf_fit(corpus.token_counts, cfg["zipf_method"])
        return (
            {"alpha": fit.alpha, "ks_distance": fit.ks_distance, "n_ranks": fit.n_ranks},
            fit.flags,
        )

    b.add("zipf", "exponent", {"fit_method": cfg["zipf_method"], "tokenizer": tok}, _zipf)

    def _ppl():
        lm = tendency.train_lm(corpus, cfg["lm_order"], cfg["lm_smoothing"])
        res = tendency.perplexity(lm, corpus)
        return res.perplexity, res.flags

    b.add(
        "perplexity_self",
        "perplexity",
        {"order": cfg["lm_order"], "smoothing": cfg["lm_smoothing"], "tokenizer": tok},
        _ppl,
    )

    if cfg["perplexity_logprobs"]:
        path = cfg["perplexity_logprobs"]

        def _ppl_ext():
            res = tendency.perplexity_from_logprobs(path, corpus)
            return res.perplexity, res.flags

        b.add(
            "perplexity_external",
            "perplexity",
            {"logprob_source": str(path)},
            _ppl_ext,
            provenance="external-model",
        )

    gaps = tendency.timestamp_gaps(corpus)
    if len(gaps) >= 2:
        b.add(
            "burstiness_timestamp",
            "dimensionless",
            {"gap_source": "timestamps"},
            lambda: tendency.burstiness(gaps),
        )
    else:
        b.skip("burstiness_timestamp", "dimensionless", {"gap_source": "timestamps"},
               "needs-at-least-3-timestamped-records")

    token = cfg["burstiness_token"]
    if token:
        b.add(
            f"burstiness_token_{token}",
            "dimensionless",
            {"gap_source": "token-recurrence", "token": token, "tokenizer": tok},
            lambda: tendency.burstiness(tendency.token_recurrence_gaps(corpus, token)),
        )


def _add_diversity(b, corpus, cfg, tok, emb, emb_source):
    b.add("token_entropy", "nats", {"tokenizer": tok},
          lambda: diversity.shannon_entropy(corpus.token_counts))
    b.add("token_gini", "probability", {"tokenizer": tok},
          lambda: diversity.gini_diversity(corpus.token_counts))
    for n in (1, 2):
        b.add(
            f"ngram_diversity_{n}",
            "ratio",
            {"n": n, "denominator": cfg["ngram_denominator"], "tokenizer": tok},
            lambda n=n: diversity.ngram_diversity(corpus, n, cfg["ngram_denominator"]),
        )

    attribute = cfg["diversity_attribute"]
    if attribute:
        def _subset():
            rep = diversity.subset_diversity(corpus.records, attribute)
            return {
                "proportions": rep.proportions,
                "entropy": rep.entropy,
                "n_labeled": rep.n_labeled,
                "n_unlabeled": rep.n_unlabeled,
            }

        b.add(f"subset_diversity_{attribute}", "nats", {"attribute": attribute}, _subset)

    emb_params = {"embedding_source": emb_source}
    if emb is None:
        b.skip("vendi_score", "effective-items", dict(emb_params, similarity="cosine"),
               "no-embeddings", provenance="external-model")
        b.skip("embedding_dispersion", "distance", emb_params,
               "no-embeddings", provenance="external-model")
        return

    def _vendi():
        if emb.n > cfg["vendi_cap"]:
            raise ValueError(
                f"{emb.n} rows exceed the eigen-decomposition cap of {cfg['vendi_cap']}; "
                "sample the embeddings first"
            )
        return diversity.vendi_score(diversity.kernel_from_embeddings(emb))

    b.add("vendi_score", "effective-items", dict(emb_params, similarity="cosine"),
          _vendi, provenance="external-model")
    b.add("embedding_dispersion", "distance", emb_params,
          lambda: diversity.embedding_dispersion(emb), provenance="external-model")


def _add_density(b, cfg, emb, emb_source):
    knn_params = {
        "k": cfg["knn_k"],
        "similarity": cfg["knn_similarity"],
        "embedding_source": emb_source,
    }
    dd_params = {"volume_mode": cfg["volume_mode"], "embedding_source": emb_source}
    if emb is None:
        b.skip("knn_density", "similarity", knn_params, "no-embeddings",
               provenance="external-model")
        b.skip("data_density", "points/volume", dd_params, "no-embeddings",
               provenance="external-model")
        return

    def _knn():
        k = min(cfg["knn_k"], emb.n - 1)
        rep = density.knn_density(emb, k, cfg["knn_similarity"])
        return {"global": rep.global_density,
                "per_point_min": min(rep.per_point_density),
                "per_point_max": max(rep.per_point_density),
                "k_used": k}

    b.add("knn_density", "similarity", knn_params, _knn, provenance="external-model")

    def _dd():
        res = density.data_density(emb, cfg["volume_mode"])
        return (
            {"density": res.density, "log_density": res.log_density,
             "degenerate_dims": list(res.degenerate_dims)},
            res.flags,
        )

    b.add("data_density", "points/volume", dd_params, _dd, provenance="external-model")


def _add_quality(b, corpus, cfg):
    reports = {}
    for norm in quality.NORMALIZATIONS:
        def _dups(norm=norm):
            rep = quality.find_duplicates(corpus, norm, cfg["dedup_top_cap"])
            reports[norm] = rep
            return {
                "n_records": rep.n_records,
                "n_distinct": rep.n_distinct,
                "duplicate_clusters": rep.duplicate_clusters,
                "excess_duplicates": rep.excess_duplicates,
            }

        name = "duplicates_exact" if norm == "exact" else "duplicates_normalized"
        b.add(name, "records", {"normalization": norm}, _dups)

    def _entropy():
        rep = reports.get("exact") or quality.find_duplicates(corpus, "exact")
        flags = ("singleton-convention",) if rep.n_records == 1 else ()
        return quality.redundancy_entropy(rep), flags

    b.add("redundancy_entropy", "ratio", {"normalization": "exact"}, _entropy)

    def _flesch():
        rep = quality.flesch_reading_ease(corpus)
        out = _stats_dict(rep.stats)
        out["n_scored"] = len(rep.per_record)
        out["n_skipped"] = rep.n_skipped
        return out

    b.add(
        "flesch_reading_ease",
        "score",
        {"sentence_splitter": "punctuation-runs", "syllables": "vowel-groups"},
        _flesch,
    )


def assemble_report(
    corpus: Corpus,
    metric_selection,
    config: dict | None = None,
    embeddings: EmbeddingMatrix | None = None,
    embedding_source: str | None = None,
    created_at: str | None = None,
) -> MeasurementReport:
    """Compute the selected metric families over the corpus.

    Families: tendency, diversity, density, quality.  Individual metric
    failures become flagged entries; they never abort the report.
    Embedding-derived entries are tagged provenance "external-model" and
    skipped (with reason) when no embeddings are supplied.
    """
    selection = list(dict.fromkeys(metric_selection))
    if not selection:
        raise ValueError("metric selection is empty")
    unknown = [m for m in selection if m not in METRIC_FAMILIES]
    if unknown:
        raise ValueError(
            f"unknown metric families {unknown}; valid names: {', '.join(METRIC_FAMILIES)}"
        )
    cfg = dict(DEFAULT_CONFIG)
    if config:
        bad = [k for k in config if k not in DEFAULT_CONFIG]
        if bad:
            raise ValueError(f"unknown config keys {bad}; valid keys: {sorted(DEFAULT_CONFIG)}")
        cfg.update(config)

    emb = None
    emb_source = embedding_source
    if embeddings is not None:
        emb = align_to_corpus(embeddings, corpus)
        if emb_source is None:
            emb_source = "unnamed"

    tok = corpus.tokenizer_config.as_dict()
    builder = _ReportBuilder()
    if "tendency" in selection:
        _add_tendency(builder, corpus, cfg, tok)
    if "diversity" in selection:
        _add_diversity(builder, corpus, cfg, tok, emb, emb_source)
    if "density" in selection:
        _add_density(builder, cfg, emb, emb_source)
    if "quality" in selection:
        _add_quality(builder, corpus, cfg)

    return MeasurementReport(
        schema_version=SCHEMA_VERSION,
        corpus_fingerprint=corpus.fingerprint,
        tokenizer_config=tok,
        created_at=created_at if created_at is not None else _default_created_at(),
        measurements=dict(sorted(builder.measurements.items())),
    )


# --- serialization --------------------------------------------------------------


def _round_floats(value):
    if isinstance(value, float):
        if not math.isfinite(value):
            raise ValueError(f"non-finite value {value} must be flag-encoded before serialization")
        return float(f"{value:.12g}")
    if isinstance(value, dict):
        return {k: _round_floats(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_round_floats(v) for v in value]
    return value


def serialize_report(report: MeasurementReport) -> str:
    """Canonical JSON: sorted keys, 12-significant-digit floats, newline-terminated."""
    payload = _round_floats(report.to_dict())
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def parse_report(source) -> MeasurementReport:
    """Read a serialized report back; inverse of serialize_report."""
    if hasattr(source, "read"):
        text = source.read()
    elif isinstance(source, str) and source.lstrip().startswith("{"):
        text = source
    else:
        with open(source, "r", encoding="utf-8") as fh:
            text = fh.read()
    obj = json.loads(text)
    for key in ("schema_version", "corpus_fingerprint", "tokenizer_config", "created_at", "measurements"):
        if key not in obj:
            raise ValueError(f"report is missing required key {key!r}")
    return MeasurementReport(
        schema_version=obj["schema_version"],
        corpus_fingerprint=obj["corpus_fingerprint"],
        tokenizer_config=obj["tokenizer_config"],
        created_at=obj["created_at"],
        measurements=obj["measurements"],
    )


# --- comparison ------------------------------------------------------------------


@dataclass(frozen=True)
class BatchDelta:
    """Per-measurement differences between a baseline and a candidate report."""

    baseline_ref: str
    candidate_ref: str
    schema_version: str
    entries: dict
    n_comparable: int
    n_incomparable: int

    def to_dict(self) -> dict:
        return {
            "baseline_ref": self.baseline_ref,
            "candidate_ref": self.candidate_ref,
            "schema_version": self.schema_version,
            "entries": self.entries,
            "n_comparable": self.n_comparable,
            "n_incomparable": self.n_incomparable,
        }


def _blocked(entry: dict) -> bool:
    for flag in entry.get("flags", ()):
        if flag in _BLOCKING_FLAGS or flag.startswith(_BLOCKING_FLAG_PREFIXES):
            return True
    return False


def _numeric_fields(value) -> dict:
    """name -> float for delta computation; scalar values map to {'value': x}."""
    if isinstance(value, bool):
        return {}
    if isinstance(value, (int, float)):
        return {"value": float(value)}
    if isinstance(value, dict):
        out = {}
        for k, v in value.items():
            if isinstance(v, bool):
                continue
            if isinstance(v, (int, float)):
                out[k] = float(v)
        return out
    return {}


def compare(baseline: MeasurementReport, candidate: MeasurementReport) -> BatchDelta:
    """Deltas for every measurement present in both reports with equal params.

    Mismatched params (including tokenizer config), flagged/unusable values,
    or one-sided presence mark the entry incomparable with a reason.
    """
    base_major = str(baseline.schema_version).split(".")[0]
    cand_major = str(candidate.schema_version).split(".")[0]
    if base_major != cand_major:
        raise ValueError(
            f"schema version mismatch: baseline {baseline.schema_version!r} "
            f"vs candidate {candidate.schema_version!r}"
        )

    entries: dict = {}
    n_comparable = 0
    names = sorted(set(baseline.measurements) | set(candidate.measurements))
    for name in names:
        b_entry = baseline.measurements.get(name)
        c_entry = candidate.measurements.get(name)
        if b_entry is None or c_entry is None:
            reason = "missing-in-baseline" if b_entry is None else "missing-in-candidate"
            entries[name] = {"comparable": False, "reason": reason, "deltas": {}}
            continue
        if b_entry.get("params") != c_entry.get("params"):
            entries[name] = {"comparable": False, "reason": "params-differ", "deltas": {}}
            continue
        if _blocked(b_entry) or _blocked(c_entry):
            entries[name] = {"comparable": False, "reason": "value-flagged", "deltas": {}}
            continue
        b_fields = _numeric_fields(b_entry.get("value"))
        c_fields = _numeric_fields(c_entry.get("value"))
        shared = sorted(set(b_fields) & set(c_fields))
        if not shared:
            entries[name] = {"comparable": False, "reason": "no-numeric-values", "deltas": {}}
            continue
        deltas = {}
        for fname in shared:
            absolute = c_fields[fname] - b_fields[fname]
            relative = absolute / abs(b_fields[fname]) if b_fields[fname] != 0 else None
            deltas[fname] = {"absolute": absolute, "relative": relative}
        entries[name] = {"comparable": True, "reason": None, "deltas": deltas}
        n_comparable += 1

    return BatchDelta(
        baseline_ref=baseline.corpus_fingerprint,
        candidate_ref=candidate.corpus_fingerprint,
        schema_version=baseline.schema_version,
        entries=entries,
        n_comparable=n_comparable,
        n_incomparable=len(names) - n_comparable,
    )


def serialize_delta(delta: BatchDelta) -> str:
    payload = _round_floats(delta.to_dict())
    return json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False, allow_nan=False) + "\n"


def format_delta_table(delta: BatchDelta) -> str:
    """Aligned text table of per-measurement deltas."""
    rows = [("measurement", "field", "absolute", "relative", "status")]
    for name, entry in delta.entries.items():
        if not entry["comparable"]:
            rows.append((name, "-", "-", "-", f"incomparable ({entry['reason']})"))
            continue
        for fname, d in entry["deltas"].items():
            rel = f"{d['relative']:+.6g}" if d["relative"] is not None else "-"
            rows.append((name, fname, f"{d['absolute']:+.6g}", rel, "ok"))
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip() for row in rows]
    lines.append(f"comparable: {delta.n_comparable}  incomparable: {delta.n_incomparable}")
    return "\n".join(lines) + "\n"
