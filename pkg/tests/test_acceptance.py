"""Acceptance gate: ten analytic, oracle, and end-to-end criteria.

Each test prints one `criterion NN PASS/FAIL` line (run with -s to see them
live) and enforces its own runtime budget where one is stated.
"""

import json
import math
import statistics
import time

import numpy as np
import pytest

from dmeter.association import CooccurrenceTable, npmi, pearson, spearman
from dmeter.cli import main
from dmeter.corpus import Corpus, FrequencyTable, Record, ngrams
from dmeter.density import data_density, knn_density
from dmeter.distance import Distribution, emd_1d, emd_discrete, kl_divergence, levenshtein
from dmeter.diversity import gini_diversity, shannon_entropy, vendi_score
from dmeter.quality import find_duplicates
from dmeter.report import parse_report
from dmeter.tendency import burstiness, perplexity, summarize, train_lm, zipf_fit
from dmeter.vectors import EmbeddingMatrix, euclidean


class _criterion:
    def __init__(self, num, desc):
        self.num = num
        self.desc = desc

    def __enter__(self):
        self.t0 = time.perf_counter()
        return self

    @property
    def elapsed(self):
        return time.perf_counter() - self.t0

    def __exit__(self, exc_type, exc, tb):
        status = "PASS" if exc_type is None else "FAIL"
        print(f"criterion {self.num:02d} {status}: {self.desc} ({self.elapsed:.2f}s)")
        return False


def zipf_pmf(alpha, n_ranks):
    w = np.arange(1, n_ranks + 1, dtype=np.float64) ** (-alpha)
    return w / w.sum()


def corpus_of(texts, **kwargs):
    return Corpus([Record(id=str(i), text=t) for i, t in enumerate(texts)], **kwargs)


def test_criterion_01_analytic_diversity_anchors():
    with _criterion(1, "analytic diversity anchors") as c:
        assert vendi_score(np.ones((4, 4))) == pytest.approx(1.0, abs=1e-9)
        for n in (2, 4, 8, 16):
            assert vendi_score(np.eye(n)) == pytest.approx(float(n), abs=1e-9)
        two_block = np.kron(np.eye(2), np.ones((3, 3)))
        assert vendi_score(two_block) == pytest.approx(2.0, abs=1e-9)
        for k in range(1, 11):
            ft = FrequencyTable({f"t{i}": 7 for i in range(k)})
            assert gini_diversity(ft) == pytest.approx(1 - 1 / k, abs=1e-12)
            assert shannon_entropy(ft) == pytest.approx(math.log(k), abs=1e-12)
        assert c.elapsed < 1.0


def test_criterion_02_zipf_recovery():
    with _criterion(2, "Zipf exponent recovery and goodness of fit"):
        rng = np.random.default_rng(42)
        vocab_size, n_tokens = 10_000, 1_000_000
        for alpha in (0.8, 1.0, 1.2):
            draws = rng.multinomial(n_tokens, zipf_pmf(alpha, vocab_size))
            ft = FrequencyTable({i: int(ci) for i, ci in enumerate(draws) if ci})
            t0 = time.perf_counter()
            fit = zipf_fit(ft)
            assert time.perf_counter() - t0 < 30.0
            assert abs(fit.alpha - alpha) <= 0.05, f"alpha {alpha}: got {fit.alpha}"

            exact = FrequencyTable(
                {i: int(ci) for i, ci in enumerate(np.round(1e9 * zipf_pmf(alpha, vocab_size)))}
            )
            t0 = time.perf_counter()
            exact_fit = zipf_fit(exact)
            assert time.perf_counter() - t0 < 30.0
            assert exact_fit.ks_distance < 0.01


def test_criterion_03_transport_distance_cross_checks():
    from test_distance import enumerate_transport_cost

    with _criterion(3, "1-d vs LP vs enumeration transport distances") as c:
        rng = np.random.default_rng(42)
        for _ in range(200):
            n = int(rng.integers(2, 20))
            xs = rng.normal(0, 3, size=n)
            ys = rng.normal(1, 2, size=n)
            p = Distribution(tuple(xs), [1 / n] * n)
            q = Distribution(tuple(ys), [1 / n] * n)
            lp = emd_discrete(p, q, lambda a, b: abs(a - b))
            assert abs(lp - emd_1d(xs, ys)) <= 1e-9

        for _ in range(100):
            np_, nq = int(rng.integers(1, 5)), int(rng.integers(1, 5))
            p = Distribution(range(np_), rng.dirichlet(np.ones(np_)))
            q = Distribution(range(100, 100 + nq), rng.dirichlet(np.ones(nq)))
            cost_matrix = rng.uniform(0, 5, size=(np_, nq))
            lp = emd_discrete(p, q, lambda a, b: cost_matrix[a][b - 100])
            brute = enumerate_transport_cost(list(p.probs), list(q.probs), cost_matrix.tolist())
            assert abs(lp - brute) <= 1e-9
        assert c.elapsed < 10.0


def test_criterion_04_metric_axioms():
    with _criterion(4, "metric axioms for euclidean/levenshtein, KL properties"):
        rng = np.random.default_rng(42)

        triples = rng.standard_normal((10_000, 3, 4))
        for a, b, m in triples:
            dab = euclidean(a, b)
            assert dab >= 0.0
            assert dab == euclidean(b, a)
            assert euclidean(a, m) <= euclidean(a, b) + euclidean(b, m) + 1e-9

        alphabet = np.array(list("abc"))
        lengths = rng.integers(0, 9, size=(10_000, 3))
        for la, lb, lm in lengths:
            a = "".join(rng.choice(alphabet, size=la))
            b = "".join(rng.choice(alphabet, size=lb))
            m = "".join(rng.choice(alphabet, size=lm))
            dab = levenshtein(a, b)
            assert dab >= 0
            assert dab == levenshtein(b, a)
            assert (dab == 0) == (a == b)
            assert levenshtein(a, m) <= dab + levenshtein(b, m)

        for _ in range(10_000):
            size = int(rng.integers(2, 11))
            support = tuple(range(size))
            p = Distribution(support, rng.dirichlet(np.ones(size)))
            q = Distribution(support, rng.dirichlet(np.ones(size)))
            assert abs(kl_divergence(p, p, smoothing=0.0)) <= 1e-12
            assert kl_divergence(p, q, smoothing=0.0) >= -1e-12


def test_criterion_05_perplexity_anchors():
    with _criterion(5, "perplexity anchors and model ordering"):
        for v in (2, 10, 100):
            text = " ".join(f"w{i}" for i in range(v))
            c = corpus_of([text, text])
            res = perplexity(train_lm(c, smoothing=0.0), c)
            assert res.perplexity == pytest.approx(float(v), abs=1e-9)

        c = corpus_of(["a a b"])
        res = perplexity(train_lm(c, smoothing=0.0), c)
        assert res.perplexity == pytest.approx(1.8899, abs=1e-3)

        vocab = [f"w{i}" for i in range(30)]
        for seed in range(20):
            rng = np.random.default_rng(seed)
            a = corpus_of([" ".join(rng.choice(vocab[:5], size=20)) for _ in range(25)])
            b = corpus_of([" ".join(rng.choice(vocab, size=20)) for _ in range(25)])
            lm = train_lm(a, smoothing=1.0)
            assert perplexity(lm, a).perplexity < perplexity(lm, b).perplexity


def test_criterion_06_association_anchors():
    from test_association import manual_average_ranks

    with _criterion(6, "nPMI anchors/bounds and spearman-rank identity"):
        from dmeter.association import build_cooccurrence

        perfect = build_cooccurrence(corpus_of(["x y", "x y", "q", "r"]))
        assert abs(npmi(perfect, "x", "y") - 1.0) < 1e-12
        indep = build_cooccurrence(corpus_of(["x y", "x", "y", "q"]))
        assert abs(npmi(indep, "x", "y")) < 1e-12

        rng = np.random.default_rng(42)
        for _ in range(10_000):
            n = int(rng.integers(1, 51))
            cx = int(rng.integers(0, n + 1))
            cy = int(rng.integers(0, n + 1))
            lo, hi = max(0, cx + cy - n), min(cx, cy)
            cxy = int(rng.integers(lo, hi + 1))
            table = CooccurrenceTable(
                pair_counts={("x", "y"): cxy} if cxy else {},
                term_counts={"x": cx, "y": cy},
                n_contexts=n,
                context_mode="document",
            )
            v = npmi(table, "x", "y", smoothing=float(rng.choice([0.1, 0.5, 1.0])))
            assert -1.0 - 1e-12 <= v <= 1.0 + 1e-12

        for _ in range(1_000):
            n = int(rng.integers(4, 30))
            xs = list(rng.integers(0, 8, size=n).astype(float))
            ys = list(rng.integers(0, 8, size=n).astype(float))
            if len(set(xs)) < 2 or len(set(ys)) < 2:
                continue
            want = pearson(manual_average_ranks(xs), manual_average_ranks(ys))
            assert spearman(xs, ys) == pytest.approx(want, abs=1e-12)


def test_criterion_07_burstiness():
    with _criterion(7, "burstiness anchors and scale invariance"):
        assert burstiness([3.0] * 50) == -1.0
        rng = np.random.default_rng(42)
        poisson_gaps = rng.exponential(1.0, size=100_000)
        assert abs(burstiness(poisson_gaps)) < 0.05
        gaps = rng.exponential(2.0, size=1_000)
        base = burstiness(gaps)
        for c in (0.1, 10.0):
            assert burstiness(c * gaps) == pytest.approx(base, abs=1e-12)


def test_criterion_08_redundancy_oracle():
    from test_quality import pairwise_cluster_sizes

    with _criterion(8, "duplicate clusters vs pairwise oracle, concat law"):
        rng = np.random.default_rng(42)
        for _ in range(20):
            pool = [f"sample text {i}" for i in range(int(rng.integers(2, 12)))]
            texts = [pool[i] for i in rng.integers(0, len(pool), size=int(rng.integers(2, 80)))]
            rep = find_duplicates(corpus_of(texts))
            oracle = pairwise_cluster_sizes(texts, lambda t: t)
            assert list(rep.cluster_sizes) == oracle
            assert rep.n_distinct == len(oracle)
            assert rep.excess_duplicates == len(texts) - len(oracle)

            # appending a full copy of the corpus: distinct set unchanged,
            # excess grows by the old record count
            doubled = Corpus(
                [Record(id=f"a{i}", text=t) for i, t in enumerate(texts)]
                + [Record(id=f"b{i}", text=t) for i, t in enumerate(texts)]
            )
            rep2 = find_duplicates(doubled)
            assert rep2.n_distinct == rep.n_distinct
            assert rep2.excess_duplicates == rep.excess_duplicates + len(texts)

        unique = corpus_of([f"unique {i}" for i in range(30)])
        both = Corpus(
            [Record(id=f"a{r.id}", text=r.text) for r in unique.records]
            + [Record(id=f"b{r.id}", text=r.text) for r in unique.records]
        )
        rep = find_duplicates(both)
        assert rep.n_distinct == 30
        assert rep.excess_duplicates == 30


def test_criterion_09_oracle_equivalence_sweep():
    with _criterion(9, "density/stats/ngram oracle equivalence"):
        rng = np.random.default_rng(42)

        for _ in range(50):
            n = int(rng.integers(5, 501))
            d = int(rng.integers(2, 16))
            k = int(rng.integers(1, min(10, n - 1) + 1))
            matrix = rng.standard_normal((n, d))
            emb = EmbeddingMatrix([f"p{i}" for i in range(n)], matrix)
            rep = knn_density(emb, k)
            unit = matrix / np.linalg.norm(matrix, axis=1)[:, None]
            for i in range(n):
                sims = np.clip(unit @ unit[i], -1.0, 1.0)
                sims = np.delete(sims, i)
                want = np.partition(sims, -k)[-k:].mean()
                assert rep.per_point_density[i] == pytest.approx(want, abs=1e-9)

        for _ in range(50):
            n = int(rng.integers(2, 200))
            d = int(rng.integers(1, 8))
            matrix = rng.uniform(-5, 5, size=(n, d))
            emb = EmbeddingMatrix([f"p{i}" for i in range(n)], matrix)
            res = data_density(emb)
            volume = float(np.prod(matrix.max(axis=0) - matrix.min(axis=0)))
            assert res.density == pytest.approx(n / volume, rel=1e-9)
            assert res.log_density == pytest.approx(math.log(n / volume), rel=1e-9)

        from scipy import stats as sps

        for _ in range(50):
            vals = list(rng.standard_normal(int(rng.integers(4, 80))) * 3 + 1)
            s = summarize(vals)
            assert s.mean == pytest.approx(statistics.fmean(vals), rel=1e-12)
            assert s.median == pytest.approx(statistics.median(vals), rel=1e-12)
            assert s.variance == pytest.approx(statistics.variance(vals), rel=1e-9)
            assert s.skewness == pytest.approx(sps.skew(vals, bias=False), rel=1e-9)
            assert s.excess_kurtosis == pytest.approx(
                sps.kurtosis(vals, fisher=True, bias=False), rel=1e-9
            )

        vocab = [f"w{i}" for i in range(12)]
        for _ in range(50):
            texts = [
                " ".join(rng.choice(vocab, size=int(rng.integers(0, 15))))
                for _ in range(int(rng.integers(1, 20)))
            ]
            c = corpus_of(texts)
            for n in (1, 2, 3):
                got = ngrams(c, n)
                recount: dict = {}
                for toks in c.iter_record_tokens():
                    for i in range(len(toks) - n + 1):
                        key = toks[i] if n == 1 else toks[i : i + n]
                        recount[key] = recount.get(key, 0) + 1
                assert dict(got.entries) == recount


def test_criterion_10_end_to_end_determinism(tmp_path, monkeypatch):
    with _criterion(10, "CLI determinism, batch deltas, tokenizer guards") as crit:
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1700000000")
        rng = np.random.default_rng(42)
        vocab = np.array([f"w{i:03d}" for i in range(200)])
        weights = zipf_pmf(1.1, 200)

        def write_batch(name, tokens_per_record):
            path = tmp_path / f"{name}.jsonl"
            with open(path, "w", encoding="utf-8") as fh:
                for i in range(10_000):
                    words = rng.choice(vocab, size=tokens_per_record, p=weights)
                    row = {
                        "id": f"{name}-{i}",
                        "text": " ".join(words) + ".",
                        "timestamp": int(i * 60 + rng.integers(0, 30)),
                    }
                    fh.write(json.dumps(row) + "\n")
            return str(path)

        batch_a = write_batch("a", 8)
        batch_b = write_batch("b", 16)

        out1, out2, out_b = (str(tmp_path / f) for f in ("a1.json", "a2.json", "b.json"))
        args = ["measure", "--metrics", "tendency,quality"]
        assert main(args + ["--input", batch_a, "--out", out1]) == 0
        assert main(args + ["--input", batch_a, "--out", out2]) == 0
        with open(out1, "rb") as f1, open(out2, "rb") as f2:
            assert f1.read() == f2.read()

        assert main(args + ["--input", batch_b, "--out", out_b]) == 0
        delta_path = str(tmp_path / "delta.json")
        assert main(["compare", out1, out_b, "--out", delta_path]) == 0
        with open(delta_path, encoding="utf-8") as fh:
            delta = json.load(fh)
        entry = delta["entries"]["record_length_tokens"]
        assert entry["comparable"] is True
        assert entry["deltas"]["mean"]["absolute"] == 8.0
        mean_a = parse_report(out1).measurements["record_length_tokens"]["value"]["mean"]
        mean_b = parse_report(out_b).measurements["record_length_tokens"]["value"]["mean"]
        assert mean_a == 8.0 and mean_b == 16.0
        assert entry["deltas"]["mean"]["absolute"] == mean_b - mean_a

        out_char = str(tmp_path / "a_char.json")
        assert main(args + ["--input", batch_a, "--tokenizer", "character",
                            "--out", out_char]) == 0
        assert main(["compare", out1, out_char, "--out", delta_path]) == 0
        with open(delta_path, encoding="utf-8") as fh:
            mismatched = json.load(fh)
        for name in ("record_length_tokens", "zipf", "perplexity_self", "token_count_stats"):
            assert mismatched["entries"][name]["reason"] == "params-differ"

        assert crit.elapsed < 60.0
