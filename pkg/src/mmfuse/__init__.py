"""Multimodal word-embedding fusion through composable motifs.

Build textual and visual vector tables separately, post-process them
through up to three layers (PCA, then CCA / residual CCA, then
concatenation or score interpolation), and search the configuration space
for the composition that best matches human word-similarity judgments.
"""

from .composition import (
    Configuration,
    FitProvider,
    ScoringModel,
    apply_configuration,
    describe_configuration,
    enumerate_configurations,
    format_configuration,
    load_configuration,
    output_dimension,
    parse_configuration,
    used_motifs,
    validate_configuration,
)
from .embeddings import (
    EmbeddingTable,
    align_vocabularies,
    load_embeddings,
    save_embeddings,
)
from .errors import (
    AlignmentError,
    ConfigurationError,
    DimensionError,
    DuplicateEntryError,
    EmptyInputError,
    GridError,
    InputError,
    MMFuseError,
    MissingReductionError,
    NoResultError,
    NumericalError,
    ParseError,
    UndefinedCorrelationError,
    WordLookupError,
    WriteError,
)
from .evaluation import (
    Benchmark,
    EvaluationResult,
    cosine,
    evaluate,
    filter_coverage,
    load_benchmark,
    pair_score,
    save_benchmark,
    spearman,
)
from .numerics import (
    DEFAULT_RIDGE,
    CcaModel,
    PcaModel,
    cca_fit,
    cca_transform,
    load_cca_model,
    load_pca_model,
    pca_fit,
    pca_transform,
    rcca_residual,
    save_cca_model,
    save_pca_model,
)
from .search import (
    GridSpec,
    SearchEntry,
    SearchReport,
    cross_evaluate,
    grid_search,
    render_report_machine,
    render_report_table,
    select_best,
)

__version__ = "0.1.0"
