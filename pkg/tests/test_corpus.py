"""Ingestion, tokenization, n-gram counting, and fingerprint behavior."""

import io
import json

import pytest

from dmeter.corpus import (
    Corpus,
    FrequencyTable,
    Record,
    TokenizerConfig,
    ingest,
    ngrams,
    tokenize,
)


def make_corpus(texts, config=TokenizerConfig(), **kwargs):
    records = [Record(id=str(i), text=t) for i, t in enumerate(texts)]
    return Corpus(records, config, **kwargs)


# --- independent oracles --------------------------------------------------------


def charclass_tokenize(text, case_fold=True):
    """Reference segmentation: maximal runs of alphanumeric-or-underscore
    characters, built by character-class scanning instead of regex."""
    tokens = []
    current = []
    for ch in text:
        if ch.isalnum() or ch == "_":
            current.append(ch)
        elif current:
            tokens.append("".join(current))
            current = []
    if current:
        tokens.append("".join(current))
    return [t.lower() for t in tokens] if case_fold else tokens


def sliding_window_ngrams(token_lists, n):
    """Brute-force per-record n-gram recount."""
    counts = {}
    for toks in token_lists:
        for i in range(len(toks)):
            if i + n <= len(toks):
                key = toks[i] if n == 1 else tuple(toks[i : i + n])
                counts[key] = counts.get(key, 0) + 1
    return counts


# --- tokenize -------------------------------------------------------------------


class TestTokenize:
    def test_word_mode_drops_punctuation(self):
        assert tokenize("The cat, sat.") == ["the", "cat", "sat"]

    def test_empty_text(self):
        assert tokenize("") == []

    def test_case_fold_off(self):
        cfg = TokenizerConfig(case_fold=False)
        assert tokenize("The CAT", cfg) == ["The", "CAT"]

    def test_whitespace_mode_keeps_punctuation(self):
        cfg = TokenizerConfig(mode="whitespace")
        assert tokenize("The cat, sat.", cfg) == ["the", "cat,", "sat."]

    def test_character_mode_drops_whitespace(self):
        cfg = TokenizerConfig(mode="character", case_fold=False)
        assert tokenize("a b\tc", cfg) == ["a", "b", "c"]

    def test_unknown_mode_rejected(self):
        with pytest.raises(ValueError, match="unknown tokenizer mode"):
            TokenizerConfig(mode="sentencepiece")

    def test_matches_character_class_reference(self):
        # Random-ish unicode strings spanning scripts, digits, punctuation.
        samples = [
            "Hello, wörld! 123",
            "naïve  café　日本語テスト",
            "under_score mixed-CASE 'quoted'",
            "a b c",
            "πολύ καλό; Ψ=42",
            "\t\n  ",
            "x" * 50 + "!?" + "y_z9",
        ]
        for text in samples:
            assert tokenize(text) == charclass_tokenize(text)
            assert tokenize(text, TokenizerConfig(case_fold=False)) == charclass_tokenize(
                text, case_fold=False
            )


# --- ingest ---------------------------------------------------------------------


class TestIngestJsonl:
    def test_two_line_example(self):
        stream = io.StringIO('{"text": "a b"}\n{"text": "b c"}\n')
        corpus = ingest(stream)
        assert corpus.n_records == 2
        assert set(corpus.vocabulary) == {"a", "b", "c"}
        assert corpus.total_tokens == 4

    def test_empty_file(self):
        corpus = ingest(io.StringIO(""))
        assert corpus.n_records == 0
        assert corpus.vocabulary == ()
        assert len(corpus.fingerprint) == 64

    def test_malformed_lines_skipped_with_line_numbers(self):
        stream = io.StringIO(
            '{"text": "ok one"}\n'
            "not json\n"
            '{"no_text_field": 1}\n'
            '{"text": "ok two"}\n'
            '{"text": 42}\n'
        )
        corpus = ingest(stream)
        assert corpus.n_records == 2
        assert [e.line for e in corpus.ingest_errors] == [2, 3, 5]

    def test_duplicate_ids_skipped(self):
        stream = io.StringIO('{"id": "x", "text": "a"}\n{"id": "x", "text": "b"}\n')
        corpus = ingest(stream)
        assert corpus.n_records == 1
        assert len(corpus.ingest_errors) == 1
        assert "duplicate" in corpus.ingest_errors[0].reason

    def test_attributes_and_timestamp_parsed(self):
        stream = io.StringIO(
            '{"id": "r1", "text": "a", "attributes": {"lang": "en"}, "timestamp": 99}\n'
        )
        corpus = ingest(stream)
        assert corpus.records[0].attributes == {"lang": "en"}
        assert corpus.records[0].timestamp == 99

    def test_bad_timestamp_skipped(self):
        stream = io.StringIO('{"text": "a", "timestamp": "yesterday"}\n')
        corpus = ingest(stream)
        assert corpus.n_records == 0
        assert corpus.ingest_errors[0].line == 1

    def test_unreadable_source_fatal(self):
        with pytest.raises(OSError):
            ingest("/nonexistent/path/corpus.jsonl")

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError, match="unknown format"):
            ingest(io.StringIO(""), format="parquet")


class TestIngestOtherFormats:
    def test_plaintext_one_record_per_line(self):
        corpus = ingest(io.StringIO("first line\nsecond line\n"), format="plaintext")
        assert corpus.n_records == 2
        assert corpus.records[1].text == "second line"

    def test_csv_with_declared_columns(self):
        stream = io.StringIO("id,text,timestamp\nr1,hello world,5\nr2,more text,\n")
        corpus = ingest(stream, format="csv")
        assert corpus.n_records == 2
        assert corpus.records[0].timestamp == 5
        assert corpus.records[1].timestamp is None

    def test_csv_missing_text_column_fatal(self):
        stream = io.StringIO("id,body\nr1,hello\n")
        with pytest.raises(ValueError, match="no 'text' column"):
            ingest(stream, format="csv")

    def test_csv_bad_timestamp_skipped(self):
        stream = io.StringIO("text,timestamp\nhello,soon\nbye,3\n")
        corpus = ingest(stream, format="csv")
        assert corpus.n_records == 1
        assert corpus.ingest_errors[0].line == 2


class TestCountingOracle:
    def test_synthetic_corpus_matches_single_pass_recount(self):
        # 1,000 records of pseudo-words; oracle recounts from the raw texts.
        texts = []
        for i in range(1000):
            words = [f"w{(i * 7 + j) % 97}" for j in range(i % 13)]
            texts.append(" ".join(words))
        buf = io.StringIO("".join(json.dumps({"text": t}) + "\n" for t in texts))
        corpus = ingest(buf)

        oracle = {}
        total = 0
        for t in texts:
            for tok in charclass_tokenize(t):
                oracle[tok] = oracle.get(tok, 0) + 1
                total += 1
        assert dict(corpus.token_counts.entries) == oracle
        assert corpus.total_tokens == total
        assert len(corpus.vocabulary) <= corpus.total_tokens


# --- ngrams ---------------------------------------------------------------------


class TestNgrams:
    def test_unigrams(self):
        corpus = make_corpus(["a a b"])
        table = ngrams(corpus, 1)
        assert dict(table.entries) == {"a": 2, "b": 1}
        assert table.total == 3

    def test_bigrams(self):
        corpus = make_corpus(["a a b"])
        table = ngrams(corpus, 2)
        assert dict(table.entries) == {("a", "a"): 1, ("a", "b"): 1}
        assert table.total == 2

    def test_n_below_one_rejected(self):
        with pytest.raises(ValueError, match="n must be >= 1"):
            ngrams(make_corpus(["a"]), 0)

    def test_no_cross_record_ngrams(self):
        corpus = make_corpus(["a b", "c d"])
        assert ("b", "c") not in ngrams(corpus, 2).entries

    def test_trigrams_match_sliding_window_oracle(self):
        texts = [
            " ".join(f"t{(i * j) % 11}" for j in range(i % 9)) for i in range(60)
        ]
        corpus = make_corpus(texts)
        for n in (1, 2, 3):
            oracle = sliding_window_ngrams(list(corpus.iter_record_tokens()), n)
            assert dict(corpus.ngram_counts(n).entries) == oracle

    def test_per_record_total_law(self):
        corpus = make_corpus(["a b c d", "x", "", "p q"])
        for n in (1, 2, 3, 5):
            expected = sum(max(0, len(t) - n + 1) for t in corpus.iter_record_tokens())
            assert ngrams(corpus, n).total == expected


# --- corpus invariants ----------------------------------------------------------


class TestCorpusInvariants:
    def test_deterministic_fingerprint_and_counts(self):
        a = make_corpus(["a b", "c"])
        b = make_corpus(["a b", "c"])
        assert a.fingerprint == b.fingerprint
        assert a.token_counts == b.token_counts

    def test_record_permutation_changes_fingerprint_not_counts(self):
        records = [Record(id="1", text="a b"), Record(id="2", text="c")]
        fwd = Corpus(records)
        rev = Corpus(list(reversed(records)))
        assert fwd.fingerprint != rev.fingerprint
        assert fwd.token_counts == rev.token_counts

    def test_fingerprint_normalizes_trailing_whitespace_and_nfc(self):
        # "é" composed vs decomposed, plus trailing spaces, fingerprint-equal.
        a = Corpus([Record(id="1", text="café  ")])
        b = Corpus([Record(id="1", text="café")])
        assert a.fingerprint == b.fingerprint

    def test_duplicate_record_ids_rejected(self):
        with pytest.raises(ValueError, match="duplicate record id"):
            Corpus([Record(id="1", text="a"), Record(id="1", text="b")])

    def test_vocabulary_in_first_seen_order(self):
        corpus = make_corpus(["b a", "a c"])
        assert corpus.vocabulary == ("b", "a", "c")


class TestFrequencyTable:
    def test_zero_counts_dropped(self):
        table = FrequencyTable({"a": 2, "b": 0})
        assert "b" not in table
        assert table.total == 2

    def test_negative_count_rejected(self):
        with pytest.raises(ValueError, match="negative count"):
            FrequencyTable({"a": -1})

    def test_total_is_sum(self):
        table = FrequencyTable.from_items(["x", "y", "x", "z", "x"])
        assert table.total == sum(table.entries.values()) == 5
        assert table["x"] == 3
        assert table.get("missing") == 0
