"""Count-based word embeddings: co-occurrence counts, PPMI, truncated SVD.

Domain adaptation is modelled by interpolating normalized co-occurrence
counts of a base corpus with those of a target corpus before factorizing,
so one base corpus yields several embedding variants.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .errors import ConfigError, FormatError, VersionError

MAGIC = b"SBEMB\x00\x00\x01"
VERSION = 1

DEFAULT_WINDOW = 5
DEFAULT_DIM = 100
DEFAULT_SHIFT = 0.0
DEFAULT_LAMBDA = 0.5


@dataclass
class CooccurrenceCounts:
    vocabulary: dict  # word -> row/column index
    counts: sp.csr_matrix
    window: int
    total: float
    symmetric: bool = True

    @property
    def words(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.__getitem__)

    def get(self, w: str, c: str) -> float:
        i, j = self.vocabulary.get(w), self.vocabulary.get(c)
        if i is None or j is None:
            return 0.0
        return float(self.counts[i, j])


@dataclass
class EmbeddingModel:
    vocabulary: dict
    vectors: np.ndarray  # float32, |V| x d
    variant: str = "base"

    def __post_init__(self):
        self.vectors = np.ascontiguousarray(self.vectors, dtype=np.float32)
        if self.vectors.ndim != 2 or self.vectors.shape[1] < 1:
            raise ConfigError("embedding matrix must be |V| x d with d >= 1")
        if self.vectors.shape[0] != len(self.vocabulary):
            raise ConfigError("vocabulary size and vector count differ")
        if not np.all(np.isfinite(self.vectors)):
            raise ConfigError("embedding contains non-finite values")

    @property
    def dim(self) -> int:
        return self.vectors.shape[1]

    @property
    def words(self) -> list[str]:
        return sorted(self.vocabulary, key=self.vocabulary.__getitem__)

    def index(self, word: str):
        i = self.vocabulary.get(word)
        if i is None:
            i = self.vocabulary.get(word.lower())
        return i

    def __contains__(self, word):
        return self.index(word) is not None

    def __getitem__(self, word) -> np.ndarray:
        i = self.index(word)
        if i is None:
            raise KeyError(word)
        return self.vectors[i]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingModel):
            return NotImplemented
        return (
            self.vocabulary == other.vocabulary
            and self.variant == other.variant
            and np.array_equal(self.vectors, other.vectors)
        )


def _streams(corpus) -> list[list[str]]:
    corpus = list(corpus)
    if corpus and isinstance(corpus[0], str):
        return [corpus]
    return [list(s) for s in corpus]


def count_cooccurrences(corpus: Iterable, window: int = DEFAULT_WINDOW) -> CooccurrenceCounts:
    """Symmetric co-occurrence counts weighted by 1/distance.

    ``corpus`` is a token list or a list of token lists; pairs never cross
    the boundary between two lists.
    """
    if window < 1:
        raise ConfigError(f"window must be >= 1, got {window}")
    streams = _streams(corpus)
    vocab: dict = {}
    for s in streams:
        for w in s:
            vocab.setdefault(w, len(vocab))
    rows, cols, vals = [], [], []
    for s in streams:
        ids = np.fromiter((vocab[w] for w in s), dtype=np.int64, count=len(s))
        for d in range(1, window + 1):
            if d >= len(ids):
                break
            a, b = ids[:-d], ids[d:]
            w = np.full(len(a), 1.0 / d)
            rows += [a, b]
            cols += [b, a]
            vals += [w, w]
    n = len(vocab)
    if rows:
        m = sp.coo_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        ).tocsr()
        m.sum_duplicates()
    else:
        m = sp.csr_matrix((n, n))
    return CooccurrenceCounts(vocab, m, window, float(m.sum()))


def merge_counts(base: CooccurrenceCounts, domain: CooccurrenceCounts, lam: float = DEFAULT_LAMBDA) -> CooccurrenceCounts:
    """``(1 - lam) * base/base.total + lam * domain/domain.total`` over the union vocabulary.

    Base words keep their indices; domain-only words are appended in their
    own index order.
    """
    if not 0.0 <= lam <= 1.0:
        raise ConfigError(f"lambda must lie in [0, 1], got {lam}")
    if base.window != domain.window:
        raise ConfigError(f"window mismatch: {base.window} vs {domain.window}")
    vocab = dict(base.vocabulary)
    for w in domain.words:
        vocab.setdefault(w, len(vocab))
    n = len(vocab)

    def lift(c: CooccurrenceCounts, weight: float) -> sp.csr_matrix:
        if c.total <= 0 or weight == 0.0:
            return sp.csr_matrix((n, n))
        remap = np.array([vocab[w] for w in c.words], dtype=np.int64)
        coo = c.counts.tocoo()
        return sp.csr_matrix(
            (coo.data * (weight / c.total), (remap[coo.row], remap[coo.col])), shape=(n, n)
        )

    merged = (lift(base, 1.0 - lam) + lift(domain, lam)).tocsr()
    merged.eliminate_zeros()
    return CooccurrenceCounts(vocab, merged, base.window, float(merged.sum()), base.symmetric and domain.symmetric)


def ppmi(counts: CooccurrenceCounts, shift: float = DEFAULT_SHIFT) -> sp.csr_matrix:
    """Positive PMI: ``max(0, log(P(w,c) / (P(w) P(c))) - shift)``, sparse."""
    if shift < 0:
        raise ConfigError("shift must be >= 0")
    if counts.total <= 0:
        raise ConfigError("cannot compute PPMI of an empty count matrix")
    m = counts.counts.tocoo()
    total = counts.total
    row = np.asarray(counts.counts.sum(axis=1)).ravel()
    col = np.asarray(counts.counts.sum(axis=0)).ravel()
    keep = m.data > 0
    r, c, v = m.row[keep], m.col[keep], m.data[keep]
    pmi = np.log(v * total / (row[r] * col[c])) - shift
    pos = pmi > 0
    out = sp.csr_matrix((pmi[pos], (r[pos], c[pos])), shape=counts.counts.shape)
    out.sort_indices()
    return out


def truncated_svd(matrix, d: int):
    """Top-``d`` singular triplets ``(U, s, Vt)`` with a deterministic sign convention."""
    if d < 1:
        raise ConfigError(f"dimension must be >= 1, got {d}")
    bound = min(matrix.shape)
    if d > bound:
        raise ConfigError(f"dimension {d} exceeds rank bound {bound}")
    if sp.issparse(matrix) and bound > 2000 and d < bound - 1:
        v0 = np.ones(bound) / np.sqrt(bound)
        u, s, vt = spla.svds(matrix.astype(np.float64), k=d, v0=v0)
        order = np.argsort(-s, kind="stable")
        u, s, vt = u[:, order], s[order], vt[order]
    else:
        dense = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix, dtype=np.float64)
        u, s, vt = np.linalg.svd(dense, full_matrices=False)
        u, s, vt = u[:, :d], s[:d], vt[:d]
    # flip each component so its largest-magnitude U entry is positive
    signs = np.sign(u[np.argmax(np.abs(u), axis=0), np.arange(u.shape[1])])
    signs[signs == 0] = 1.0
    return u * signs, s, vt * signs[:, None]


def factorize(ppmi_matrix, d: int, vocabulary: dict | None = None, variant: str = "base") -> EmbeddingModel:
    """Embed rows of ``ppmi_matrix`` as ``U_d * sqrt(S_d)``."""
    u, s, _ = truncated_svd(ppmi_matrix, d)
    vectors = u * np.sqrt(s)
    if vocabulary is None:
        vocabulary = {str(i): i for i in range(ppmi_matrix.shape[0])}
    return EmbeddingModel(dict(vocabulary), vectors, variant)


def train_embeddings(
    corpus,
    window: int = DEFAULT_WINDOW,
    dim: int = DEFAULT_DIM,
    shift: float = DEFAULT_SHIFT,
    base_corpus=None,
    lam: float = DEFAULT_LAMBDA,
    variant: str = "base",
) -> EmbeddingModel:
    """Count, optionally adapt toward ``corpus`` from ``base_corpus``, then factorize.

    ``dim`` is capped at the vocabulary size.
    """
    counts = count_cooccurrences(corpus, window)
    if base_corpus is not None:
        counts = merge_counts(count_cooccurrences(base_corpus, window), counts, lam)
    m = ppmi(counts, shift)
    return factorize(m, min(dim, m.shape[0]), counts.vocabulary, variant)


def doc_vector(tokens: Sequence, model: EmbeddingModel) -> np.ndarray:
    """Mean token vector; out-of-vocabulary tokens count as zero vectors."""
    if not model.vocabulary:
        raise ConfigError("embedding model is empty")
    total = np.zeros(model.dim, dtype=np.float64)
    n = 0
    for tok in tokens:
        surface = getattr(tok, "surface", tok)
        i = model.index(surface)
        if i is not None:
            total += model.vectors[i]
        n += 1
    return total / n if n else total


# ---------------------------------------------------------------------------
# serialization


def _write_str(f, s: str):
    b = s.encode("utf-8")
    f.write(struct.pack("<I", len(b)))
    f.write(b)


def _read_exact(f, n):
    b = f.read(n)
    if len(b) != n:
        raise FormatError("unexpected end of file")
    return b


def _read_str(f) -> str:
    (n,) = struct.unpack("<I", _read_exact(f, 4))
    return _read_exact(f, n).decode("utf-8")


def save_embeddings(model: EmbeddingModel, path) -> None:
    words = model.words
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<III", VERSION, model.dim, len(words)))
        _write_str(f, model.variant)
        for w in words:
            _write_str(f, w)
        f.write(model.vectors.astype("<f4", copy=False).tobytes(order="C"))


def load_embeddings(path) -> EmbeddingModel:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise FormatError(f"{path}: not an embedding file")
        version, d, n = struct.unpack("<III", _read_exact(f, 12))
        if version > VERSION:
            raise VersionError(f"{path}: format version {version} is newer than supported {VERSION}")
        variant = _read_str(f)
        words = [_read_str(f) for _ in range(n)]
        data = np.frombuffer(_read_exact(f, 4 * n * d), dtype="<f4").reshape(n, d)
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes")
    return EmbeddingModel({w: i for i, w in enumerate(words)}, data.astype(np.float32), variant)


def export_text(model: EmbeddingModel, path) -> None:
    """Plain-text export: one word per line followed by its floats."""
    with open(path, "w", encoding="utf-8") as f:
        for w, row in zip(model.words, model.vectors):
            f.write(w + " " + " ".join(repr(float(x)) for x in row) + "\n")
