"""Command-line interface: measure, compare, assoc, dedup.

Standard output carries human-readable summaries; files named by --out carry
machine-readable JSON.  Flags override config-file values.  Exit codes:
0 success, 1 fatal (bad arguments, unreadable input, unknown metric), 2 when
the report was written but contains per-metric error or skipped entries.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys

from . import association, quality, report
from .corpus import FORMATS, TOKENIZER_MODES, TokenizerConfig, ingest, tokenize
from .report import DEFAULT_CONFIG, METRIC_FAMILIES, _round_floats
from .vectors import load_embeddings

_MEASURE_INT_KEYS = ("lm_order", "knn_k", "dedup_top_cap", "vendi_cap")
_MEASURE_FLOAT_KEYS = ("lm_smoothing",)


def _fail(message: str) -> int:
    print(f"error: {message}", file=sys.stderr)
    return 1


def _json_dump(payload) -> str:
    return json.dumps(_round_floats(payload), sort_keys=True, indent=2,
                      ensure_ascii=False, allow_nan=False) + "\n"


def _load_config(path: str | None) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser()
    if path:
        read = cfg.read(path, encoding="utf-8")
        if not read:
            raise OSError(f"cannot read config file {path!r}")
    return cfg


def _tokenizer_from(args, cfg) -> TokenizerConfig:
    """Flag value wins over [tokenizer] config section.

    Flag syntax: a mode name, optionally suffixed ':nofold' to keep case.
    """
    mode = cfg.get("tokenizer", "mode", fallback="unicode-word")
    case_fold = cfg.getboolean("tokenizer", "case_fold", fallback=True)
    spec = getattr(args, "tokenizer", None)
    if spec:
        if spec.endswith(":nofold"):
            spec, case_fold = spec[: -len(":nofold")], False
        else:
            case_fold = True
        mode = spec
    if mode not in TOKENIZER_MODES:
        raise ValueError(f"unknown tokenizer mode {mode!r}; choose from {TOKENIZER_MODES}")
    return TokenizerConfig(mode=mode, case_fold=case_fold)


def _ingest_from(args, cfg):
    if not args.input:
        raise ValueError("--input is required")
    fmt = args.format or cfg.get("measure", "format", fallback="jsonl")
    if fmt not in FORMATS:
        raise ValueError(f"unknown format {fmt!r}; choose from {FORMATS}")
    tokenizer = _tokenizer_from(args, cfg)
    return ingest(args.input, format=fmt, tokenizer_config=tokenizer)


def _measure_config(cfg) -> dict:
    out = {}
    if not cfg.has_section("measure"):
        return out
    for key, raw in cfg.items("measure"):
        if key in ("metrics", "format", "out"):
            continue
        if key not in DEFAULT_CONFIG:
            raise ValueError(
                f"unknown [measure] config key {key!r}; valid keys: {sorted(DEFAULT_CONFIG)}"
            )
        if key in _MEASURE_INT_KEYS:
            out[key] = int(raw)
        elif key in _MEASURE_FLOAT_KEYS:
            out[key] = float(raw)
        else:
            out[key] = raw
    return out


def _entry_summary(name: str, entry: dict) -> str:
    flags = entry.get("flags", [])
    blocked = [f for f in flags if f.startswith(("error:", "skipped:"))]
    if blocked:
        note = entry.get("note")
        detail = f" ({note})" if note else ""
        return f"{name}: {', '.join(blocked)}{detail}"
    value = entry.get("value")
    if isinstance(value, dict):
        parts = [
            f"{k}={v:.6g}"
            for k, v in list(value.items())[:4]
            if isinstance(v, (int, float)) and not isinstance(v, bool)
        ]
        body = " ".join(parts) if parts else "(structured)"
    elif isinstance(value, (int, float)) and not isinstance(value, bool):
        body = f"{value:.6g}"
    elif value is None:
        body = ", ".join(flags) if flags else "null"
    else:
        body = str(value)
    extra = [f for f in flags if not f.startswith(("error:", "skipped:"))]
    suffix = f"  [{', '.join(extra)}]" if extra else ""
    return f"{name}: {body}{suffix}"


def cmd_measure(args) -> int:
    try:
        cfg = _load_config(args.config)
        metrics_raw = args.metrics or cfg.get("measure", "metrics", fallback=None)
        metrics = (
            [m.strip() for m in metrics_raw.split(",") if m.strip()]
            if metrics_raw
            else list(METRIC_FAMILIES)
        )
        unknown = [m for m in metrics if m not in METRIC_FAMILIES]
        if unknown:
            return _fail(
                f"unknown metrics {unknown}; valid names: {', '.join(METRIC_FAMILIES)}"
            )
        if not metrics:
            return _fail(f"no metrics selected; valid names: {', '.join(METRIC_FAMILIES)}")
        measure_cfg = _measure_config(cfg)

        corpus = _ingest_from(args, cfg)
        for err in corpus.ingest_errors:
            print(f"ingest: skipped line {err.line}: {err.reason}", file=sys.stderr)

        embeddings = None
        if args.embeddings:
            embeddings = load_embeddings(args.embeddings)

        rep = report.assemble_report(
            corpus,
            metrics,
            config=measure_cfg,
            embeddings=embeddings,
            embedding_source=args.embeddings,
        )
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    out_path = args.out or cfg.get("measure", "out", fallback="report.json")
    try:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(report.serialize_report(rep))
    except OSError as exc:
        return _fail(f"cannot write report to {out_path!r}: {exc}")

    for name, entry in rep.measurements.items():
        print(_entry_summary(name, entry))
    print(f"report written to {out_path}")

    failed = any(
        f.startswith(("error:", "skipped:"))
        for entry in rep.measurements.values()
        for f in entry.get("flags", [])
    )
    return 2 if failed else 0


def cmd_compare(args) -> int:
    reports = []
    for path in (args.baseline, args.candidate):
        try:
            reports.append(report.parse_report(path))
        except (OSError, ValueError, KeyError) as exc:
            return _fail(f"cannot parse report {path!r}: {exc}")
    try:
        delta = report.compare(reports[0], reports[1])
    except ValueError as exc:
        return _fail(str(exc))
    sys.stdout.write(report.format_delta_table(delta))
    if args.out:
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(report.serialize_delta(delta))
        except OSError as exc:
            return _fail(f"cannot write delta to {args.out!r}: {exc}")
    return 0


def _read_targets(path: str, tokenizer: TokenizerConfig) -> list[str]:
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.read().splitlines()
    targets = []
    for line in lines:
        term = line.strip()
        if not term or term.startswith("#"):
            continue
        toks = tokenize(term, tokenizer)
        targets.append(toks[0] if len(toks) == 1 else term)
    if not targets:
        raise ValueError(f"target file {path!r} contains no terms")
    return targets


def cmd_assoc(args) -> int:
    try:
        cfg = _load_config(args.config)
        if not args.targets:
            raise ValueError("--targets is required")
        tokenizer = _tokenizer_from(args, cfg)
        targets = _read_targets(args.targets, tokenizer)
        corpus = _ingest_from(args, cfg)
        for err in corpus.ingest_errors:
            print(f"ingest: skipped line {err.line}: {err.reason}", file=sys.stderr)

        topk = cfg.getint("assoc", "topk", fallback=20)
        smoothing = cfg.getfloat("assoc", "smoothing", fallback=0.0)
        context_mode = cfg.get("assoc", "context_mode", fallback="document")
        window_size = cfg.getint("assoc", "window_size", fallback=0) or None

        table = association.build_cooccurrence(
            corpus, targets=targets, context_mode=context_mode, window_size=window_size
        )
        rows = []
        for target in targets:
            co = association.top_npmi(table, target, k=topk, smoothing=smoothing)
            flags = []
            if target not in table.term_counts:
                flags.append("warning:target-absent")
            rows.append({
                "target": target,
                "co_terms": [
                    {"term": t, "npmi": v, "pair_count": c} for t, v, c in co
                ],
                "flags": flags,
            })
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    for row in rows:
        header = row["target"]
        if row["flags"]:
            header += f"  [{', '.join(row['flags'])}]"
        print(header)
        if not row["co_terms"]:
            print("  (no co-terms)")
        for co in row["co_terms"]:
            print(f"  {co['term']}  npmi={co['npmi']:+.4f}  contexts={co['pair_count']}")

    if args.out:
        payload = {
            "corpus_fingerprint": corpus.fingerprint,
            "context_mode": context_mode,
            "smoothing": smoothing,
            "targets": rows,
        }
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(_json_dump(payload))
        except OSError as exc:
            return _fail(f"cannot write association table to {args.out!r}: {exc}")
    return 0


def cmd_dedup(args) -> int:
    try:
        cfg = _load_config(args.config)
        corpus = _ingest_from(args, cfg)
        for err in corpus.ingest_errors:
            print(f"ingest: skipped line {err.line}: {err.reason}", file=sys.stderr)
        normalization = cfg.get("dedup", "normalization", fallback="exact")
        top_cap = cfg.getint("dedup", "top_cap", fallback=10)
        rep = quality.find_duplicates(corpus, normalization, top_cap)
        entropy = quality.redundancy_entropy(rep)
    except (OSError, ValueError) as exc:
        return _fail(str(exc))

    print(f"records: {rep.n_records}")
    print(f"distinct: {rep.n_distinct}")
    print(f"duplicate clusters: {rep.duplicate_clusters}")
    print(f"excess duplicates: {rep.excess_duplicates}")
    print(f"redundancy entropy: {entropy:.6g}")
    for fp, count, sample in rep.top_clusters:
        snippet = sample if len(sample) <= 60 else sample[:57] + "..."
        print(f"  x{count}  {fp[:12]}  {snippet!r}")

    if args.out:
        payload = {
            "corpus_fingerprint": corpus.fingerprint,
            "normalization": rep.normalization,
            "n_records": rep.n_records,
            "n_distinct": rep.n_distinct,
            "duplicate_clusters": rep.duplicate_clusters,
            "excess_duplicates": rep.excess_duplicates,
            "redundancy_entropy": entropy,
            "top_clusters": [
                {"fingerprint": fp, "count": count, "sample": sample}
                for fp, count, sample in rep.top_clusters
            ],
        }
        try:
            with open(args.out, "w", encoding="utf-8") as fh:
                fh.write(_json_dump(payload))
        except OSError as exc:
            return _fail(f"cannot write dedup report to {args.out!r}: {exc}")
    return 0


def _add_common_flags(parser, *, embeddings=False, targets=False, metrics=False):
    parser.add_argument("--input", help="input corpus path")
    parser.add_argument("--format", choices=FORMATS, help="input format (default jsonl)")
    parser.add_argument("--tokenizer",
                        help="tokenizer mode: unicode-word | whitespace | character, "
                             "append ':nofold' to keep case")
    parser.add_argument("--config", help="INI config file; flags override it")
    parser.add_argument("--out", help="output file path")
    parser.add_argument("--seed", type=int, default=0,
                        help="reserved for future sampling support (unused)")
    if metrics:
        parser.add_argument("--metrics",
                            help=f"comma-separated families: {', '.join(METRIC_FAMILIES)}")
    if embeddings:
        parser.add_argument("--embeddings", help="embedding matrix file (text-vec format)")
    if targets:
        parser.add_argument("--targets", help="target-terms file, one per line, # comments")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmeter",
        description="Corpus measurement engine: measure, compare, assoc, dedup.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_measure = sub.add_parser("measure", help="compute a measurement report over a corpus")
    _add_common_flags(p_measure, embeddings=True, metrics=True)
    p_measure.set_defaults(func=cmd_measure)

    p_compare = sub.add_parser("compare", help="delta table between two measurement reports")
    p_compare.add_argument("baseline", help="baseline report JSON")
    p_compare.add_argument("candidate", help="candidate report JSON")
    p_compare.add_argument("--out", help="write the delta as JSON here")
    p_compare.add_argument("--seed", type=int, default=0, help="reserved (unused)")
    p_compare.set_defaults(func=cmd_compare)

    p_assoc = sub.add_parser("assoc", help="top co-terms by nPMI for target terms")
    _add_common_flags(p_assoc, targets=True)
    p_assoc.set_defaults(func=cmd_assoc)

    p_dedup = sub.add_parser("dedup", help="duplicate-cluster report over a corpus")
    _add_common_flags(p_dedup)
    p_dedup.set_defaults(func=cmd_dedup)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
