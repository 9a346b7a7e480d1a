"""Corpus ingestion: standoff and CoNLL formats, tokenization, sentences, windows.

Documents are plain text plus character-offset annotations. The standoff
format is the BRAT one: a ``.txt`` file with the raw text and an ``.ann``
file with lines such as::

    T1<TAB>PROFESION 5 13<TAB>cocinero
"""

from __future__ import annotations

import bisect
import os
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional, Sequence

from .errors import ConfigError, IntegrityError, OverlapError, ParseError, RangeError

__all__ = [
    "SpanAnnotation",
    "Document",
    "Token",
    "Window",
    "parse_standoff",
    "write_standoff",
    "read_document",
    "write_document",
    "read_corpus",
    "write_corpus",
    "load_subword_vocab",
    "tokenize",
    "segment_sentences",
    "make_windows",
    "align_annotations",
    "read_conll",
    "write_conll",
]


@dataclass(frozen=True, order=True)
class SpanAnnotation:
    start: int
    end: int
    label: str

    def __post_init__(self):
        if not self.start < self.end:
            raise RangeError(f"empty or inverted span ({self.start}, {self.end})")
        if not self.label:
            raise ConfigError("annotation label must be non-empty")


@dataclass(frozen=True)
class Document:
    id: str
    text: str
    annotations: tuple = ()

    def __post_init__(self):
        anns = tuple(sorted(self.annotations))
        object.__setattr__(self, "annotations", anns)
        n = len(self.text)
        for a in anns:
            if a.start < 0 or a.end > n:
                raise RangeError(f"annotation ({a.start}, {a.end}, {a.label}) outside text of length {n}")
        for prev, cur in zip(anns, anns[1:]):
            if prev == cur:
                raise OverlapError(f"duplicate annotation {cur}")
        # nested or disjoint only
        for i, a in enumerate(anns):
            for b in anns[i + 1:]:
                if b.start >= a.end:
                    break
                nested = (a.start <= b.start and b.end <= a.end) or (b.start <= a.start and a.end <= b.end)
                if not nested:
                    raise OverlapError(f"partially overlapping annotations {a} and {b}")

    def with_annotations(self, annotations) -> "Document":
        return Document(self.id, self.text, tuple(annotations))

    def surface(self, ann: SpanAnnotation) -> str:
        return self.text[ann.start:ann.end]


@dataclass(frozen=True)
class Token:
    surface: str
    start: int
    end: int
    sentence_index: int = 0


@dataclass(frozen=True)
class Window:
    """A contiguous token slice whose middle part (the core) gets predictions.

    ``offset`` is the document index of ``tokens[0]``; the core occupies
    window positions ``[left_context_len, len(tokens) - right_context_len)``.
    """

    tokens: tuple
    offset: int
    left_context_len: int
    right_context_len: int

    @property
    def core_range(self) -> range:
        return range(self.left_context_len, len(self.tokens) - self.right_context_len)

    @property
    def core_tokens(self) -> tuple:
        r = self.core_range
        return self.tokens[r.start:r.stop]

    @property
    def doc_core_range(self) -> range:
        r = self.core_range
        return range(self.offset + r.start, self.offset + r.stop)


# ---------------------------------------------------------------------------
# standoff

_T_LINE = re.compile(r"^(T\d+)\t(\S+) (\d+) (\d+)(?:\t(.*))?$")
_OTHER_LINE = re.compile(r"^([RENAM]\d+|#\d*)\t")


def _normalize_surface(s: str) -> str:
    return s.replace("\r", " ").replace("\n", " ")


def parse_standoff(ann_text: str, doc_text: str, doc_id: str = "") -> Document:
    """Parse standoff annotations against the companion document text.

    Non-entity lines (relations, events, attributes, notes) are skipped.
    The optional surface column must match the text slice (newlines in the
    slice are compared as spaces, as BRAT writes them).
    """
    anns = []
    for lineno, raw in enumerate(ann_text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            continue
        if _OTHER_LINE.match(line):
            continue
        m = _T_LINE.match(line)
        if m is None:
            if line.startswith("T") and ";" in line:
                raise ParseError("discontinuous spans are not supported", lineno)
            raise ParseError(f"malformed annotation line {line!r}", lineno)
        ann_id, label, start, end, surface = m.groups()
        start, end = int(start), int(end)
        if not (0 <= start < end <= len(doc_text)):
            raise RangeError(f"{ann_id}: offsets ({start}, {end}) out of range for text of length {len(doc_text)}")
        if surface is not None and surface != _normalize_surface(doc_text[start:end]):
            raise IntegrityError(
                f"{ann_id}: surface {surface!r} does not match text slice {doc_text[start:end]!r}"
            )
        anns.append(SpanAnnotation(start, end, label))
    return Document(doc_id, doc_text, tuple(anns))


def write_standoff(doc: Document) -> tuple[str, str]:
    """Serialize ``doc`` to ``(ann_text, doc_text)``; T-ids follow offset order."""
    lines = []
    for i, a in enumerate(sorted(doc.annotations), start=1):
        lines.append(f"T{i}\t{a.label} {a.start} {a.end}\t{_normalize_surface(doc.surface(a))}\n")
    return "".join(lines), doc.text


def read_document(txt_path, ann_path=None) -> Document:
    txt_path = Path(txt_path)
    if ann_path is None:
        ann_path = txt_path.with_suffix(".ann")
    # newline="" keeps offsets byte-faithful to the file
    with open(txt_path, encoding="utf-8", newline="") as f:
        text = f.read()
    ann_text = ""
    if Path(ann_path).exists():
        with open(ann_path, encoding="utf-8", newline="") as f:
            ann_text = f.read()
    return parse_standoff(ann_text, text, doc_id=txt_path.stem)


def write_document(doc: Document, directory) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    ann_text, text = write_standoff(doc)
    with open(directory / f"{doc.id}.txt", "w", encoding="utf-8", newline="") as f:
        f.write(text)
    with open(directory / f"{doc.id}.ann", "w", encoding="utf-8", newline="") as f:
        f.write(ann_text)


def read_corpus(directory, ann_directory=None) -> list[Document]:
    """Read every ``*.txt`` in ``directory`` (sorted by name) with its ``.ann``.

    ``ann_directory`` lets a second annotation layer live next to shared text.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise FileNotFoundError(f"corpus directory not found: {directory}")
    docs = []
    for txt in sorted(directory.glob("*.txt")):
        ann = (Path(ann_directory) if ann_directory else directory) / f"{txt.stem}.ann"
        docs.append(read_document(txt, ann))
    return docs


def write_corpus(docs: Iterable[Document], directory) -> None:
    for doc in docs:
        write_document(doc, directory)


# ---------------------------------------------------------------------------
# tokenization

# letter runs, digit runs, then any other visible character on its own
_WORD = re.compile(r"[^\W\d_]+|\d+|\S", re.UNICODE)


def load_subword_vocab(path) -> frozenset:
    with open(path, encoding="utf-8") as f:
        return frozenset(line.rstrip("\n\r") for line in f if line.rstrip("\n\r"))


def _split_subwords(word: str, start: int, vocab, max_len: int) -> list[Token]:
    pieces = []
    i = 0
    while i < len(word):
        for j in range(min(len(word), i + max_len), i, -1):
            if word[i:j] in vocab:
                break
        else:
            j = i + 1  # unknown character becomes its own piece
        pieces.append(Token(word[i:j], start + i, start + j))
        i = j
    return pieces


def tokenize(doc: Document | str, subword_vocab: Optional[Iterable[str]] = None) -> list[Token]:
    """Split text into word tokens, optionally refined into subword pieces.

    Whitespace separates words; letter runs and digit runs form tokens and
    every other visible character is a token by itself. With a vocabulary,
    each word is further split by greedy longest match.
    """
    text = doc.text if isinstance(doc, Document) else doc
    if not text:
        raise ConfigError("cannot tokenize empty text")
    vocab = None
    if subword_vocab is not None:
        vocab = subword_vocab if isinstance(subword_vocab, (set, frozenset)) else frozenset(subword_vocab)
        max_len = max((len(p) for p in vocab), default=1)
    tokens = []
    for m in _WORD.finditer(text):
        if vocab is None:
            tokens.append(Token(m.group(), m.start(), m.end()))
        else:
            tokens.extend(_split_subwords(m.group(), m.start(), vocab, max_len))
    return tokens


_TERMINATORS = frozenset(".!?:")
_BLANK_LINE = re.compile(r"\n[^\S\n]*\n")


def segment_sentences(tokens: Sequence[Token], text: str) -> list[Token]:
    """Assign sentence indices.

    A sentence ends after '.', '!', '?' or ':' when whitespace and then an
    uppercase letter or digit follows, and wherever a blank line separates
    two tokens.
    """
    out = []
    sent = 0
    for i, tok in enumerate(tokens):
        if i > 0:
            prev = tokens[i - 1]
            gap = text[prev.end:tok.start]
            if _BLANK_LINE.search(gap):
                sent += 1
            elif prev.surface in _TERMINATORS and gap and gap.isspace():
                first = tok.surface[:1]
                if first.isupper() or first.isdigit():
                    sent += 1
        out.append(Token(tok.surface, tok.start, tok.end, sent))
    return out


def make_windows(tokens: Sequence[Token], max_core: int = 300, max_context: int = 100) -> list[Window]:
    """Cut a document's tokens into windows of at most ``max_core`` core tokens.

    Each sentence starts a new core; sentences longer than ``max_core`` are
    chunked. Up to ``max_context`` neighbouring document tokens are attached
    on each side, truncated at the document boundaries.
    """
    if max_core < 1:
        raise ConfigError(f"max_core must be >= 1, got {max_core}")
    if max_context < 0:
        raise ConfigError(f"max_context must be >= 0, got {max_context}")
    tokens = tuple(tokens)
    n = len(tokens)
    cores = []
    i = 0
    while i < n:
        j = i
        while j < n and tokens[j].sentence_index == tokens[i].sentence_index:
            j += 1
        for s in range(i, j, max_core):
            cores.append((s, min(s + max_core, j)))
        i = j
    windows = []
    for s, e in cores:
        left = max(0, s - max_context)
        right = min(n, e + max_context)
        windows.append(Window(tokens[left:right], left, s - left, right - e))
    return windows


def align_annotations(tokens: Sequence[Token], annotations: Iterable[SpanAnnotation]):
    """Snap annotation boundaries outwards to enclosing token boundaries.

    Returns ``(aligned, n_adjusted)``. Spans covering no token at all are
    dropped and counted as adjusted.
    """
    ends = [t.end for t in tokens]
    aligned = []
    adjusted = 0
    for a in annotations:
        i = bisect.bisect_right(ends, a.start)
        j = i
        while j < len(tokens) and tokens[j].start < a.end:
            j += 1
        if j == i:
            adjusted += 1
            continue
        s, e = tokens[i].start, tokens[j - 1].end
        if (s, e) != (a.start, a.end):
            adjusted += 1
        aligned.append(SpanAnnotation(s, e, a.label))
    # expansion may create duplicates; keep one
    return sorted(set(aligned)), adjusted


# ---------------------------------------------------------------------------
# CoNLL


def read_conll(text: str, scheme: Optional[str] = None):
    """Parse two-column CoNLL text into ``[(surfaces, TagSequence), ...]``.

    Blank lines separate windows. Columns may be separated by a tab or by
    spaces. ``scheme`` defaults to BIOSE if any E-/S- tag occurs, else BIO.
    """
    from .tagcodec import TagSequence, infer_scheme

    blocks = []
    surfaces, tags = [], []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.rstrip("\r")
        if not line.strip():
            if surfaces:
                blocks.append((surfaces, tags))
                surfaces, tags = [], []
            continue
        cols = line.split("\t") if "\t" in line else line.split()
        if len(cols) != 2:
            raise ParseError(f"expected 2 columns, found {len(cols)}", lineno)
        surfaces.append(cols[0])
        tags.append(cols[1])
    if surfaces:
        blocks.append((surfaces, tags))
    if scheme is None:
        scheme = infer_scheme(t for _, ts in blocks for t in ts)
    return [(tuple(s), TagSequence(tuple(t), scheme)) for s, t in blocks]


def write_conll(blocks) -> str:
    """Inverse of :func:`read_conll`; tab separated, one blank line between windows."""
    parts = []
    for surfaces, tags in blocks:
        tag_list = tags.tags if hasattr(tags, "tags") else tags
        if len(surfaces) != len(tag_list):
            raise ConfigError("surface and tag counts differ")
        parts.append("".join(f"{s}\t{t}\n" for s, t in zip(surfaces, tag_list)))
    return "\n".join(parts)


def corpus_files(directory) -> list[Path]:
    return sorted(Path(directory).glob("*.txt"))


def read_raw_texts(directory) -> list[str]:
    texts = []
    for p in corpus_files(directory):
        with open(p, encoding="utf-8", newline="") as f:
            texts.append(f.read())
    return texts


def ensure_dir(path) -> Path:
    path = Path(path)
    os.makedirs(path, exist_ok=True)
    return path
