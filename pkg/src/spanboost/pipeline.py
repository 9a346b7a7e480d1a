"""Document-level glue: preprocessing, training on documents, tagging documents."""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Optional, Sequence

from . import crf, tagcodec
from .corpus_io import Document, Token, Window, align_annotations, make_windows, segment_sentences, tokenize
from .crf import CrfModel, FeatureExtractor, TrainConfig
from .tagcodec import BIOSE, TagSequence

log = logging.getLogger(__name__)


@dataclass
class Prepared:
    doc: Document
    tokens: list
    windows: list
    tags: Optional[TagSequence]
    adjusted: int = 0  # annotations whose boundaries were snapped to tokens

    def labeled_windows(self):
        if self.tags is None:
            raise ValueError(f"document {self.doc.id} has no tags")
        out = []
        for w in self.windows:
            r = w.doc_core_range
            out.append((w, self.tags.tags[r.start:r.stop]))
        return out


@dataclass(frozen=True)
class Preprocessor:
    """Tokenization and windowing settings shared by every model of a run."""

    subword_vocab: Optional[frozenset] = None
    max_core: int = 300
    max_context: int = 100
    scheme: str = BIOSE

    def tokens(self, doc: Document) -> list[Token]:
        if not doc.text.strip():
            return []
        return segment_sentences(tokenize(doc, self.subword_vocab), doc.text)

    def prepare(self, doc: Document, with_tags: bool = True) -> Prepared:
        toks = self.tokens(doc)
        windows = make_windows(toks, self.max_core, self.max_context)
        tags = None
        adjusted = 0
        if with_tags:
            anns, adjusted = align_annotations(toks, doc.annotations)
            if adjusted:
                log.warning("%s: %d annotation(s) expanded to token boundaries", doc.id, adjusted)
            tags = tagcodec.encode(toks, anns, self.scheme)
        return Prepared(doc, toks, windows, tags, adjusted)


def training_windows(docs: Sequence[Document], pre: Preprocessor):
    out = []
    for d in docs:
        out.extend(pre.prepare(d).labeled_windows())
    return out


def train_on_documents(
    train_docs: Sequence[Document],
    dev_docs: Optional[Sequence[Document]] = None,
    config: Optional[TrainConfig] = None,
    pre: Preprocessor = Preprocessor(),
    extractor: Optional[FeatureExtractor] = None,
    init: Optional[CrfModel] = None,
    on_epoch=None,
) -> CrfModel:
    config = config or TrainConfig()
    train = training_windows(train_docs, pre)
    dev = training_windows(dev_docs, pre) if dev_docs else None
    return crf.train(train, dev, config, pre.scheme, extractor, init, on_epoch)


def predict_tags(model: CrfModel, docs: Sequence[Document], pre: Preprocessor) -> list[tuple[Prepared, TagSequence]]:
    out = []
    for d in docs:
        p = pre.prepare(d, with_tags=False)
        out.append((p, crf.predict(model, p.windows)))
    return out


def tag_documents(model: CrfModel, docs: Sequence[Document], pre: Preprocessor) -> list[Document]:
    """Replace each document's annotations with the model's predictions."""
    out = []
    for p, tags in predict_tags(model, docs, pre):
        out.append(p.doc.with_annotations(tagcodec.decode(tags, p.tokens)))
    return out


def with_dev_stopping(config: TrainConfig) -> TrainConfig:
    return replace(config, early_stopping=crf.BY_DEV)
