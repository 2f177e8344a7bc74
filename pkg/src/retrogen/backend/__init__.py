from .client import HTTPBackendClient
from .mock import (
    CAUSAL_MODEL,
    DEFAULT_VOCAB,
    EXTRACT_MODEL,
    INFER_MODEL,
    SEQ2SEQ_MODEL,
    UNIFORM_MODEL,
    MockBackend,
)
from .protocol import LogitMap, ModelCapability, RawClause, SpanResult, TokenSeq
from .server import BackendServer

__all__ = [
    "HTTPBackendClient",
    "MockBackend",
    "BackendServer",
    "LogitMap",
    "ModelCapability",
    "RawClause",
    "SpanResult",
    "TokenSeq",
    "DEFAULT_VOCAB",
    "CAUSAL_MODEL",
    "SEQ2SEQ_MODEL",
    "UNIFORM_MODEL",
    "INFER_MODEL",
    "EXTRACT_MODEL",
]
