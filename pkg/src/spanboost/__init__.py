"""spanboost: span tagging with linear-chain CRFs, strategic data splits and voting ensembles."""

from .corpus_io import Document, SpanAnnotation, read_corpus, write_corpus
from .crf import CrfModel, FeatureExtractor, TrainConfig, load_model, save_model
from .embeddings import EmbeddingModel, train_embeddings
from .ensemble import EnsembleConfig, vote
from .evaluation import EvalReport, evaluate
from .pipeline import Preprocessor, tag_documents, train_on_documents
from .splits import SplitConfig, SplitPlan, make_plan
from .tagcodec import BIO, BIOSE, TagSequence

__version__ = "0.1.0"

__all__ = [
    "BIO", "BIOSE", "CrfModel", "Document", "EmbeddingModel", "EnsembleConfig", "EvalReport",
    "FeatureExtractor", "Preprocessor", "SpanAnnotation", "SplitConfig", "SplitPlan", "TagSequence",
    "TrainConfig", "evaluate", "load_model", "make_plan", "read_corpus", "save_model",
    "tag_documents", "train_embeddings", "train_on_documents", "vote", "write_corpus",
]
