"""vidtext: two-stage video-text retrieval over language-model embeddings.

Layer-selectable embedding readout from pluggable backends, cosine
first-stage ranking with dual-softmax calibration, yes-likelihood
second-stage reranking, and a text-only low-rank adapter trainer.
"""

__version__ = "0.1.0"

from .adapter import (
    AdapterParams,
    TrainConfig,
    apply_adapter,
    dsl_loss,
    fit_adapter,
    init_adapter,
    read_adapter,
    train,
    write_adapter,
)
from .backends import (
    Backend,
    BackendDescriptor,
    CountingBackend,
    MediaSpec,
    MockBackend,
    PromptTemplate,
    TemplateId,
    ToyBackend,
)
from .cache import cache_read, cache_write
from .errors import (
    CacheChecksumError,
    CacheError,
    CacheTruncatedError,
    CacheVersionError,
    CapabilityError,
    ConfigError,
    ContractViolation,
    IngestError,
    RerankInterrupted,
    TransportError,
    VidtextError,
)
from .kernels import build_similarity_matrix, col_softmax, cosine, row_softmax
from .rerank import RerankConfig, rerank, rerank_all
from .retrieval import (
    CalibrationConfig,
    Direction,
    EvalReport,
    dual_softmax_calibrate,
    evaluate,
    rank,
    recall_at_k,
    select_temperature,
)
from .sweep import LayerSweeper
from .types import (
    DatasetManifest,
    Embedding,
    ManifestItem,
    Modality,
    RankedEntry,
    RankedList,
    SimilarityMatrix,
    Split,
    Stage,
    TextPair,
)

__all__ = [
    "AdapterParams",
    "Backend",
    "BackendDescriptor",
    "CacheChecksumError",
    "CacheError",
    "CacheTruncatedError",
    "CacheVersionError",
    "CalibrationConfig",
    "CapabilityError",
    "ConfigError",
    "ContractViolation",
    "CountingBackend",
    "DatasetManifest",
    "Direction",
    "Embedding",
    "EvalReport",
    "IngestError",
    "LayerSweeper",
    "ManifestItem",
    "MediaSpec",
    "MockBackend",
    "Modality",
    "PromptTemplate",
    "RankedEntry",
    "RankedList",
    "RerankConfig",
    "RerankInterrupted",
    "SimilarityMatrix",
    "Split",
    "Stage",
    "TemplateId",
    "TextPair",
    "ToyBackend",
    "TrainConfig",
    "TransportError",
    "VidtextError",
    "apply_adapter",
    "build_similarity_matrix",
    "cache_read",
    "cache_write",
    "col_softmax",
    "cosine",
    "dsl_loss",
    "dual_softmax_calibrate",
    "evaluate",
    "fit_adapter",
    "init_adapter",
    "rank",
    "read_adapter",
    "recall_at_k",
    "rerank",
    "rerank_all",
    "row_softmax",
    "select_temperature",
    "train",
    "write_adapter",
]
