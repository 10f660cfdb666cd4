"""Joint biomedical event extraction via multi-layer sequence labeling.

The pipeline: parse standoff annotations, split into sentences, tokenize
with entity masking, tag each token in three layers (trigger, theme,
cause), merge candidate-trigger information into the argument layers,
assemble the tagged spans into (possibly nested) events, and score them
against gold annotations.
"""

from .assembly import ArgLink, BuiltEvent, EventSet, assemble
from .codec import (
    LabelFrame,
    LabelSchema,
    TokenizedSentence,
    decode_labels,
    encode_labels,
    tokenize_and_mask,
)
from .errors import BioeventsError
from .model import STRATEGIES, ModelConfig, TaggerModel, param_count, seed_everything
from .scoring import DocView, ScoreReport, aggregate_runs, score_corpus, score_documents
from .standoff import (
    parse_document,
    read_corpus,
    read_document,
    resolve_events,
    serialize_events,
    split_sentences,
)
from .training import (
    RunConfig,
    evaluate_model,
    predict_document,
    prepare_documents,
    train_one_seed,
    train_run,
)
from .types import Document, EntityMention, EventType, GoldEvent, TriggerMention
from .vocab import SubwordVocab

__version__ = "0.1.0"

__all__ = [
    "ArgLink",
    "BioeventsError",
    "BuiltEvent",
    "DocView",
    "Document",
    "EntityMention",
    "EventSet",
    "EventType",
    "GoldEvent",
    "LabelFrame",
    "LabelSchema",
    "ModelConfig",
    "RunConfig",
    "STRATEGIES",
    "ScoreReport",
    "SubwordVocab",
    "TaggerModel",
    "TokenizedSentence",
    "TriggerMention",
    "aggregate_runs",
    "assemble",
    "decode_labels",
    "encode_labels",
    "evaluate_model",
    "param_count",
    "parse_document",
    "predict_document",
    "prepare_documents",
    "read_corpus",
    "read_document",
    "resolve_events",
    "score_corpus",
    "score_documents",
    "seed_everything",
    "serialize_events",
    "split_sentences",
    "tokenize_and_mask",
    "train_one_seed",
    "train_run",
]
