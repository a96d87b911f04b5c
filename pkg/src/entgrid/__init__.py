"""Entity-grid coherence models for monologue and asynchronous conversations."""

from .conversation import (
    ConversationGrid,
    Post,
    SentenceGraph,
    Thread,
    build_conv_grid,
    build_sentence_graph,
    enumerate_valid_trees,
    extract_paths,
    path_documents,
    permute_thread,
    thread_as_document,
    with_parent_vector,
)
from .errors import NumericError, ValidationError
from .evaluation import (
    EvalReport,
    PairDecision,
    ReconstructionReport,
    baseline_all_first,
    baseline_all_previous,
    baseline_cos_sim,
    discriminate,
    inverse_eval,
    reconstruct,
    reconstruction_metrics,
)
from .grids import (
    AnnotatedDocument,
    EntityGrid,
    Role,
    build_grid,
    inverse_order,
    lexicalize,
    permute_sentences,
    transition_index,
    transition_probabilities,
)
from .models import ConversationCoherenceRanker, GridCoherenceRanker, load_model, save_model
from .pairs import PairSet, generate_pairs, split_dev
from .synth import SynthConfig, generate_documents, generate_threads

__version__ = "0.1.0"

__all__ = [
    "AnnotatedDocument",
    "ConversationCoherenceRanker",
    "ConversationGrid",
    "EntityGrid",
    "EvalReport",
    "GridCoherenceRanker",
    "NumericError",
    "PairDecision",
    "PairSet",
    "Post",
    "ReconstructionReport",
    "Role",
    "SentenceGraph",
    "SynthConfig",
    "Thread",
    "ValidationError",
    "baseline_all_first",
    "baseline_all_previous",
    "baseline_cos_sim",
    "build_conv_grid",
    "build_grid",
    "build_sentence_graph",
    "discriminate",
    "enumerate_valid_trees",
    "extract_paths",
    "generate_documents",
    "generate_pairs",
    "generate_threads",
    "inverse_eval",
    "inverse_order",
    "lexicalize",
    "load_model",
    "path_documents",
    "permute_sentences",
    "permute_thread",
    "reconstruct",
    "reconstruction_metrics",
    "save_model",
    "split_dev",
    "thread_as_document",
    "transition_index",
    "transition_probabilities",
    "with_parent_vector",
]
