"""dmeter: corpus measurement engine.

Distance, density, diversity, tendency, association, redundancy, and
readability measurements over text corpora and embedding matrices, with
reproducible measurement reports and batch comparison.
"""

from .association import (
    CooccurrenceTable,
    build_cooccurrence,
    npmi,
    pearson,
    pmi,
    spearman,
    top_npmi,
)
from .corpus import (
    Corpus,
    FrequencyTable,
    IngestError,
    Record,
    TokenizerConfig,
    ingest,
    ngrams,
    tokenize,
)
from .density import DataDensity, DensityReport, data_density, knn_density
from .distance import (
    Distribution,
    WmdResult,
    emd_1d,
    emd_discrete,
    kl_divergence,
    levenshtein,
    word_movers_distance,
)
from .diversity import (
    SimilarityKernel,
    SubsetDiversityReport,
    embedding_dispersion,
    gini_diversity,
    kernel_from_embeddings,
    ngram_diversity,
    shannon_entropy,
    subset_diversity,
    vendi_score,
)
from .errors import KernelInvalidError, MeasurementError, UndefinedValueError
from .quality import (
    FleschReport,
    RedundancyReport,
    find_duplicates,
    flesch_reading_ease,
    flesch_score,
    redundancy_entropy,
)
from .report import (
    BatchDelta,
    MeasurementReport,
    assemble_report,
    compare,
    parse_report,
    serialize_report,
)
from .tendency import (
    NgramLM,
    PerplexityResult,
    SummaryStats,
    ZipfFit,
    burstiness,
    perplexity,
    perplexity_from_logprobs,
    summarize,
    timestamp_gaps,
    token_recurrence_gaps,
    train_lm,
    zipf_fit,
)
from .vectors import (
    EmbeddingMatrix,
    align_to_corpus,
    cosine_distance,
    cosine_similarity,
    euclidean,
    load_embeddings,
    save_embeddings,
)

__version__ = "0.1.0"

__all__ = [
    "BatchDelta",
    "CooccurrenceTable",
    "Corpus",
    "DataDensity",
    "DensityReport",
    "Distribution",
    "EmbeddingMatrix",
    "FleschReport",
    "FrequencyTable",
    "IngestError",
    "KernelInvalidError",
    "MeasurementError",
    "MeasurementReport",
    "NgramLM",
    "PerplexityResult",
    "Record",
    "RedundancyReport",
    "SimilarityKernel",
    "SubsetDiversityReport",
    "SummaryStats",
    "TokenizerConfig",
    "UndefinedValueError",
    "WmdResult",
    "ZipfFit",
    "align_to_corpus",
    "assemble_report",
    "build_cooccurrence",
    "burstiness",
    "compare",
    "cosine_distance",
    "cosine_similarity",
    "data_density",
    "embedding_dispersion",
    "emd_1d",
    "emd_discrete",
    "euclidean",
    "find_duplicates",
    "flesch_reading_ease",
    "flesch_score",
    "gini_diversity",
    "ingest",
    "kernel_from_embeddings",
    "kl_divergence",
    "knn_density",
    "levenshtein",
    "load_embeddings",
    "ngram_diversity",
    "ngrams",
    "npmi",
    "parse_report",
    "pearson",
    "perplexity",
    "perplexity_from_logprobs",
    "pmi",
    "redundancy_entropy",
    "save_embeddings",
    "serialize_report",
    "shannon_entropy",
    "spearman",
    "subset_diversity",
    "summarize",
    "timestamp_gaps",
    "token_recurrence_gaps",
    "tokenize",
    "top_npmi",
    "train_lm",
    "vendi_score",
    "word_movers_distance",
    "zipf_fit",
]
