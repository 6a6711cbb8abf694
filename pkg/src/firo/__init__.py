"""FiRo: fidelity-preserving sanitizer for character-level noisy text.

The package recovers the noise-free form of each input token via
anagram-invariant character-composed embeddings, finite-context aggregation,
and a softmax restricted to an edit-distance-1 candidate cluster. It also
ships the matching noise injector, a black-box beam-search attacker, and
robustness/fidelity estimators.
"""

__version__ = "0.1.0"

from .cluster import ClusterIndex, build_index, effective_vocabulary, load_index, query_cluster, save_index
from .errors import (
    BadMagicError,
    ConfigError,
    ContractError,
    DataFormatError,
    FiroError,
    TruncatedError,
    VersionError,
)
from .model import (
    FiroModel,
    aggregate_context,
    compose_word_embedding,
    firo_sanitizer,
    init_model,
    load_model,
    sanitize,
    save_model,
    score_cluster,
)
from .noise import OpKind, PerturbOp, apply_op, perturb_sentence, word_difference
from .text import Sentence, Vocabulary, load_vocabulary, tokenize

__all__ = [
    "__version__",
    "BadMagicError",
    "ClusterIndex",
    "ConfigError",
    "ContractError",
    "DataFormatError",
    "FiroError",
    "FiroModel",
    "OpKind",
    "PerturbOp",
    "Sentence",
    "TruncatedError",
    "VersionError",
    "Vocabulary",
    "aggregate_context",
    "apply_op",
    "build_index",
    "compose_word_embedding",
    "effective_vocabulary",
    "firo_sanitizer",
    "init_model",
    "load_index",
    "load_model",
    "load_vocabulary",
    "perturb_sentence",
    "query_cluster",
    "sanitize",
    "save_index",
    "save_model",
    "score_cluster",
    "tokenize",
    "word_difference",
]
