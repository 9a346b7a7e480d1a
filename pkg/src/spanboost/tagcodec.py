"""BIO / BIOSE tag sequences: encoding, decoding, validation and repair."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

from .corpus_io import SpanAnnotation, Token
from .errors import ConfigError, DecodeError, EncodingError

BIO = "BIO"
BIOSE = "BIOSE"
SCHEMES = (BIO, BIOSE)

_PREFIXES = {BIO: frozenset("BI"), BIOSE: frozenset("BIES")}

ORPHAN_INSIDE = "orphan-inside"
LABEL_MISMATCH = "label-mismatch"
DANGLING_BEGIN = "dangling-begin"
INVALID_TAG = "invalid-tag"


def check_scheme(scheme: str) -> str:
    s = scheme.upper()
    if s not in SCHEMES:
        raise ConfigError(f"unknown tag scheme {scheme!r}; expected BIO or BIOSE")
    return s


@dataclass(frozen=True)
class TagSequence:
    tags: tuple
    scheme: str = BIOSE

    def __post_init__(self):
        object.__setattr__(self, "tags", tuple(self.tags))
        object.__setattr__(self, "scheme", check_scheme(self.scheme))

    def __len__(self):
        return len(self.tags)

    def __iter__(self):
        return iter(self.tags)

    def __getitem__(self, i):
        return self.tags[i]


class Violation(NamedTuple):
    index: int
    kind: str


def split_tag(tag: str) -> tuple[str, str]:
    """``"B-X"`` -> ``("B", "X")``; ``"O"`` -> ``("O", "")``."""
    if tag == "O":
        return "O", ""
    prefix, sep, label = tag.partition("-")
    if not sep or len(prefix) != 1 or not label:
        return "", ""
    return prefix, label


def infer_scheme(tags: Iterable[str]) -> str:
    for t in tags:
        if split_tag(t)[0] in ("E", "S"):
            return BIOSE
    return BIO


def tag_set(labels: Iterable[str], scheme: str) -> list[str]:
    """All tags of ``scheme`` for entity ``labels``, with ``"O"`` first."""
    prefixes = "BI" if check_scheme(scheme) == BIO else "BIES"
    return ["O"] + [f"{p}-{lab}" for lab in sorted(set(labels)) for p in prefixes]


# ---------------------------------------------------------------------------
# spans <-> tags


def _token_spans(tokens: Sequence[Token], annotations: Iterable[SpanAnnotation]):
    by_start = {t.start: i for i, t in enumerate(tokens)}
    by_end = {t.end: i for i, t in enumerate(tokens)}
    spans = []
    for a in annotations:
        if a.start not in by_start or a.end not in by_end:
            raise EncodingError(f"span {a} does not align with token boundaries")
        spans.append((by_start[a.start], by_end[a.end] + 1, a))
    return sorted(spans)


def encode(tokens: Sequence[Token], annotations: Iterable[SpanAnnotation], scheme: str = BIOSE) -> TagSequence:
    scheme = check_scheme(scheme)
    tags = ["O"] * len(tokens)
    prev_end = 0
    for s, e, a in _token_spans(tokens, annotations):
        if s < prev_end:
            raise EncodingError(f"span {a} overlaps or nests within a previous span")
        prev_end = e
        if scheme == BIOSE and e - s == 1:
            tags[s] = f"S-{a.label}"
            continue
        tags[s] = f"B-{a.label}"
        for i in range(s + 1, e):
            tags[i] = f"I-{a.label}"
        if scheme == BIOSE:
            tags[e - 1] = f"E-{a.label}"
    return TagSequence(tuple(tags), scheme)


def validate(tags: TagSequence) -> list[Violation]:
    """Grammar violations of ``tags`` under its scheme, in index order."""
    allowed = _PREFIXES[tags.scheme]
    out = []
    open_label = None  # label of the entity currently being continued
    open_at = -1
    for i, tag in enumerate(tags.tags):
        prefix, label = split_tag(tag)
        if prefix != "O" and prefix not in allowed:
            out.append(Violation(i, INVALID_TAG))
            if tags.scheme == BIOSE and open_label is not None:
                out.append(Violation(open_at, DANGLING_BEGIN))
            open_label = None
            continue
        if tags.scheme == BIO:
            if prefix == "I":
                if open_label is None:
                    out.append(Violation(i, ORPHAN_INSIDE))
                elif open_label != label:
                    out.append(Violation(i, LABEL_MISMATCH))
                open_label = label
            else:
                open_label = label if prefix == "B" else None
            continue
        # BIOSE
        if prefix in ("I", "E"):
            if open_label is None:
                out.append(Violation(i, ORPHAN_INSIDE))
            elif open_label != label:
                out.append(Violation(i, LABEL_MISMATCH))
            if prefix == "E":
                open_label = None
            elif open_label is None:
                open_label, open_at = label, i
            else:
                open_label = label
            continue
        if open_label is not None:
            out.append(Violation(open_at, DANGLING_BEGIN))
            open_label = None
        if prefix == "B":
            open_label, open_at = label, i
    if tags.scheme == BIOSE and open_label is not None:
        out.append(Violation(open_at, DANGLING_BEGIN))
    return sorted(out)


def is_valid(tags: TagSequence) -> bool:
    return not validate(tags)


def chunks(tags: TagSequence) -> list[tuple[int, int, str]]:
    """Token-index entities ``(start, end_exclusive, label)`` of a valid sequence."""
    problems = validate(tags)
    if problems:
        v = problems[0]
        raise DecodeError(f"invalid {tags.scheme} sequence ({v.kind})", v.index)
    out = []
    start = None
    for i, tag in enumerate(tags.tags):
        prefix, label = split_tag(tag)
        if prefix in ("B", "S", "O") and start is not None:
            if tags.scheme == BIO:
                out.append((start, i, cur))
            start = None
        if prefix == "S":
            out.append((i, i + 1, label))
        elif prefix == "B":
            start, cur = i, label
        elif prefix == "E":
            out.append((start, i + 1, label))
            start = None
    if start is not None:
        out.append((start, len(tags.tags), cur))
    return out


def decode(tags: TagSequence, tokens: Sequence[Token]) -> list[SpanAnnotation]:
    if len(tags) != len(tokens):
        raise ConfigError(f"{len(tags)} tags for {len(tokens)} tokens")
    return [SpanAnnotation(tokens[s].start, tokens[e - 1].end, lab) for s, e, lab in chunks(tags)]


# ---------------------------------------------------------------------------
# scheme conversion and repair


def biose_to_bio(tags: TagSequence) -> TagSequence:
    out = []
    for tag in tags.tags:
        prefix, label = split_tag(tag)
        if prefix == "S":
            tag = f"B-{label}"
        elif prefix == "E":
            tag = f"I-{label}"
        out.append(tag)
    return TagSequence(tuple(out), BIO)


def bio_to_biose(tags: TagSequence) -> TagSequence:
    """Convert a valid BIO sequence to BIOSE."""
    seq = list(tags.tags)
    out = []
    for i, tag in enumerate(seq):
        prefix, label = split_tag(tag)
        nxt = split_tag(seq[i + 1]) if i + 1 < len(seq) else ("O", "")
        continues = nxt == ("I", label)
        if prefix == "B":
            out.append(f"B-{label}" if continues else f"S-{label}")
        elif prefix == "I":
            out.append(f"I-{label}" if continues else f"E-{label}")
        else:
            out.append(tag)
    return TagSequence(tuple(out), BIOSE)


def repair(tags: TagSequence) -> tuple[TagSequence, int]:
    """Make a sequence grammatical; return it with the number of changed positions.

    Single left-to-right pass over BIO tags: an ``I-X`` not preceded by
    ``B-X`` or ``I-X`` becomes ``B-X``; malformed tags become ``O``. BIOSE
    input is repaired through its BIO form and converted back.
    """
    if tags.scheme == BIOSE:
        fixed, _ = repair(biose_to_bio(tags))
        out = bio_to_biose(fixed)
        return out, sum(a != b for a, b in zip(tags.tags, out.tags))
    out = []
    changed = 0
    prev = ("O", "")
    for tag in tags.tags:
        prefix, label = split_tag(tag)
        if prefix not in ("O", "B", "I"):
            prefix, label, tag = "O", "", "O"
            changed += 1
        elif prefix == "I" and prev not in (("B", label), ("I", label)):
            prefix, tag = "B", f"B-{label}"
            changed += 1
        out.append(tag)
        prev = (prefix, label)
    return TagSequence(tuple(out), BIO), changed
