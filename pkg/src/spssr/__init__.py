"""Secure and private retrieval of one structured subset of messages from N replicated servers."""

from .field import FieldElement, FieldOrder, fe_add, fe_neg, fe_sub, validate_order
from .model import (
    Database,
    DemandFamily,
    Instance,
    NormalizationLog,
    RetrievalResult,
    SchemeParams,
    ValidationReport,
    derive_params,
    gen_database,
    normalize_family,
    validate_family,
)
from .randomness import RandomSource, SeededSource, StreamSource, ZeroSource
from .scheme import (
    AnswerVector,
    DemandPartition,
    QueryMatrix,
    ServerCoord,
    compute_answer,
    decode,
    gen_query_first,
    gen_query_n,
    partition_demand,
    run_round,
    server_coords,
)

__version__ = "0.1.0"
