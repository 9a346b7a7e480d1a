"""Linear-chain CRF tagger over sparse hand-crafted (and binned embedding) features.

Transition matrices are ``(L + 2) x (L + 2)``: rows/columns ``0..L-1`` are
labels, ``L`` is the begin state and ``L + 1`` the end state. Entry
``[a, b]`` scores moving from ``a`` to ``b``.

A window's chain covers only its core tokens; context tokens feed the
neighbour features of the core positions but are never labelled.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass, field, fields
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp

from . import tagcodec
from .corpus_io import Window
from .errors import ConfigError, FormatError, TrainingError, VersionError
from .tagcodec import BIO, BIOSE, TagSequence

log = logging.getLogger(__name__)

MAGIC = b"SBCRF\x00\x00\x01"
VERSION = 1

BY_LOSS = "by-training-loss"
BY_DEV = "by-dev-f1"


# ---------------------------------------------------------------------------
# features


def word_shape(s: str) -> str:
    """Collapsed character classes, e.g. ``"Dr2."`` -> ``"Xxd."``."""
    out = []
    for ch in s:
        if ch.isupper():
            c = "X"
        elif ch.islower():
            c = "x"
        elif ch.isdigit():
            c = "d"
        else:
            c = ch
        if not out or out[-1] != c:
            out.append(c)
    return "".join(out)


class EmbeddingBins:
    """Per-word embedding vectors quantized into five bins per dimension.

    Thresholds sit at +-0.5 and +-1.5 standard deviations of each dimension
    (computed over the vocabulary).
    """

    LABELS = ("--", "-", "0", "+", "++")

    def __init__(self, vocabulary: dict, bins: np.ndarray):
        self.vocabulary = dict(vocabulary)
        self.bins = np.asarray(bins, dtype=np.uint8)

    @classmethod
    def from_embedding(cls, model) -> "EmbeddingBins":
        v = model.vectors.astype(np.float64)
        sigma = v.std(axis=0)
        sigma[sigma == 0] = 1.0
        z = v / sigma
        bins = np.digitize(z, [-1.5, -0.5, 0.5, 1.5], right=False)
        # digitize is right-open; values exactly at +0.5/+1.5 go up, keep them lower
        bins = np.where(np.isin(z, [0.5, 1.5]), bins - 1, bins)
        return cls(model.vocabulary, bins)

    @property
    def dim(self) -> int:
        return self.bins.shape[1]

    def features(self, word: str) -> list[str]:
        i = self.vocabulary.get(word)
        if i is None:
            i = self.vocabulary.get(word.lower())
        if i is None:
            return ["e:oov"]
        return [f"e{k}:{self.LABELS[b]}" for k, b in enumerate(self.bins[i])]

    def __eq__(self, other):
        return (
            isinstance(other, EmbeddingBins)
            and self.vocabulary == other.vocabulary
            and np.array_equal(self.bins, other.bins)
        )


class FeatureExtractor:
    """Sparse token features from a window of tokens.

    Templates: bias, surface, lowercase, prefixes/suffixes up to
    ``affix_len``, word shape, digit/punctuation flags, whether the token is
    glued to its predecessor (subword continuation), lowercased neighbours
    within ``neighbors`` positions and the two bigram conjunctions around
    the token. Optionally binned embedding features.
    """

    def __init__(self, embedding: Optional[EmbeddingBins] = None, affix_len: int = 3, neighbors: int = 2):
        self.embedding = embedding
        self.affix_len = affix_len
        self.neighbors = neighbors

    def _word(self, tokens, i):
        if i < 0:
            return "<s>"
        if i >= len(tokens):
            return "</s>"
        return tokens[i].surface.lower()

    def token_features(self, tokens, i) -> list[str]:
        tok = tokens[i]
        w = tok.surface
        lw = w.lower()
        f = ["bias", "w=" + w, "lw=" + lw, "shape=" + word_shape(w)]
        for k in range(1, self.affix_len + 1):
            if len(lw) >= k:
                f.append(f"p{k}={lw[:k]}")
                f.append(f"s{k}={lw[-k:]}")
        if w.isdigit():
            f.append("digit")
        elif not any(ch.isalnum() for ch in w):
            f.append("punct")
        if w[:1].isupper():
            f.append("title")
        if i > 0 and tokens[i - 1].end == tok.start:
            f.append("glued")
        for off in range(1, self.neighbors + 1):
            f.append(f"w[-{off}]={self._word(tokens, i - off)}")
            f.append(f"w[+{off}]={self._word(tokens, i + off)}")
        f.append(f"w[-1]|w={self._word(tokens, i - 1)}|{lw}")
        f.append(f"w|w[+1]={lw}|{self._word(tokens, i + 1)}")
        if self.embedding is not None:
            f.extend(self.embedding.features(w))
        return f

    def extract(self, tokens, positions=None) -> list[list[str]]:
        if positions is None:
            positions = range(len(tokens))
        return [self.token_features(tokens, i) for i in positions]

    def __eq__(self, other):
        return (
            isinstance(other, FeatureExtractor)
            and self.affix_len == other.affix_len
            and self.neighbors == other.neighbors
            and self.embedding == other.embedding
        )


# ---------------------------------------------------------------------------
# model


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 16
    learning_rate: float = 0.1
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    weight_decay: float = 0.0
    early_stopping: str = BY_LOSS
    patience: int = 3
    seed: int = 0
    constrained: bool = True

    def __post_init__(self):
        if self.epochs < 1:
            raise ConfigError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ConfigError("beta1 and beta2 must lie in [0, 1)")
        if self.weight_decay < 0:
            raise ConfigError("weight_decay must be >= 0")
        if self.patience < 1:
            raise ConfigError("patience must be >= 1")
        mode = self.early_stopping.lower().replace("_", "-")
        if mode in ("loss", "training-loss"):
            mode = BY_LOSS
        elif mode in ("dev", "dev-f1"):
            mode = BY_DEV
        if mode not in (BY_LOSS, BY_DEV):
            raise ConfigError(f"unknown early_stopping mode {self.early_stopping!r}")
        self.early_stopping = mode

    @classmethod
    def from_mapping(cls, values: dict) -> "TrainConfig":
        kinds = {f.name: f.type for f in fields(cls)}
        kwargs = {}
        for key, raw in values.items():
            key = key.replace("-", "_")
            if key not in kinds:
                raise ConfigError(f"unknown training option {key!r}")
            default = getattr(cls, key)
            try:
                if isinstance(default, bool):
                    kwargs[key] = str(raw).lower() in ("1", "true", "yes", "on")
                elif isinstance(default, int):
                    kwargs[key] = int(raw)
                elif isinstance(default, float):
                    kwargs[key] = float(raw)
                else:
                    kwargs[key] = str(raw)
            except ValueError:
                raise ConfigError(f"bad value for {key}: {raw!r}") from None
        return cls(**kwargs)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    dev_f1: Optional[float] = None

    def __str__(self):
        s = f"epoch {self.epoch} loss {self.loss:.6f}"
        if self.dev_f1 is not None:
            s += f" dev_f1 {self.dev_f1:.4f}"
        return s


def allowed_transitions(labels: Sequence[str], scheme: str) -> np.ndarray:
    """Boolean ``(L+2, L+2)`` mask of transitions that keep the sequence grammatical."""
    L = len(labels)
    start, end = L, L + 1
    ok = np.zeros((L + 2, L + 2), dtype=bool)
    parts = [tagcodec.split_tag(t) for t in labels]
    for a in range(L + 1):
        pa, la = parts[a] if a < L else ("<", "")
        for b in range(L + 1):
            pb, lb = parts[b] if b < L else (">", "")
            if b == L:
                b = end
            if scheme == BIO:
                if pb == "I":
                    ok[a, b] = pa in ("B", "I") and la == lb
                else:
                    ok[a, b] = True
            else:
                open_ = pa in ("B", "I")
                if pb in ("I", "E"):
                    ok[a, b] = open_ and la == lb
                else:
                    ok[a, b] = not open_
    ok[start, end] = False
    return ok


@dataclass
class CrfModel:
    labels: tuple
    features: dict
    W: np.ndarray
    T: np.ndarray
    scheme: str = BIOSE
    extractor: FeatureExtractor = field(default_factory=FeatureExtractor)
    constrained: bool = True
    version: int = VERSION
    history: list = field(default_factory=list, compare=False, repr=False)

    def __post_init__(self):
        self.labels = tuple(self.labels)
        self.scheme = tagcodec.check_scheme(self.scheme)
        L = len(self.labels)
        if self.W.shape != (len(self.features), L):
            raise ConfigError(f"emission weights have shape {self.W.shape}, expected {(len(self.features), L)}")
        if self.T.shape != (L + 2, L + 2):
            raise ConfigError(f"transition weights have shape {self.T.shape}, expected {(L + 2, L + 2)}")
        self._label_index = {t: i for i, t in enumerate(self.labels)}
        self._mask = None

    @classmethod
    def zeros(cls, labels, features, scheme=BIOSE, extractor=None, constrained=True) -> "CrfModel":
        labels = tuple(labels)
        feats = features if isinstance(features, dict) else {f: i for i, f in enumerate(features)}
        return cls(
            labels,
            dict(feats),
            np.zeros((len(feats), len(labels))),
            np.zeros((len(labels) + 2, len(labels) + 2)),
            scheme,
            extractor or FeatureExtractor(),
            constrained,
        )

    @property
    def n_labels(self) -> int:
        return len(self.labels)

    def label_index(self, tag: str) -> int:
        return self._label_index[tag]

    def transitions(self) -> np.ndarray:
        """Transition scores used for inference, with forbidden moves at -inf."""
        if not self.constrained:
            return self.T
        if self._mask is None:
            self._mask = allowed_transitions(self.labels, self.scheme)
        return np.where(self._mask, self.T, -np.inf)

    def featurize(self, tokens, positions=None) -> sp.csr_matrix:
        """Binary design matrix (positions x features); unknown features are ignored."""
        feats = self.extractor.extract(tokens, positions)
        return _design_matrix(feats, self.features)

    def featurize_window(self, window: Window) -> sp.csr_matrix:
        return self.featurize(window.tokens, window.core_range)

    def copy(self) -> "CrfModel":
        return CrfModel(
            self.labels, dict(self.features), self.W.copy(), self.T.copy(),
            self.scheme, self.extractor, self.constrained, self.version,
        )

    def __eq__(self, other):
        if not isinstance(other, CrfModel):
            return NotImplemented
        return (
            self.labels == other.labels
            and self.features == other.features
            and self.scheme == other.scheme
            and self.constrained == other.constrained
            and self.version == other.version
            and self.extractor == other.extractor
            and np.array_equal(self.W, other.W)
            and np.array_equal(self.T, other.T)
        )


def _design_matrix(feats: list[list[str]], alphabet: dict) -> sp.csr_matrix:
    indptr = [0]
    indices = []
    for fs in feats:
        idx = sorted({alphabet[f] for f in fs if f in alphabet})
        indices.extend(idx)
        indptr.append(len(indices))
    data = np.ones(len(indices))
    return sp.csr_matrix((data, np.array(indices, dtype=np.int64), np.array(indptr)), shape=(len(feats), len(alphabet)))


# ---------------------------------------------------------------------------
# inference


def score_window(model: CrfModel, features) -> np.ndarray:
    """Emission scores (n x L): the sum of weights of each position's active features.

    ``features`` is a design matrix or a list of per-position feature-name lists.
    """
    if not sp.issparse(features):
        features = _design_matrix(list(features), model.features)
    return np.asarray(features @ model.W)


def _logsumexp(a: np.ndarray, axis: int) -> np.ndarray:
    m = np.max(a, axis=axis, keepdims=True)
    m = np.where(np.isfinite(m), m, 0.0)
    with np.errstate(divide="ignore"):
        out = np.log(np.sum(np.exp(a - m), axis=axis, keepdims=True)) + m
    return np.squeeze(out, axis=axis)


def _check(emissions, transitions):
    emissions = np.asarray(emissions, dtype=np.float64)
    transitions = np.asarray(transitions, dtype=np.float64)
    if emissions.ndim != 2 or emissions.shape[0] < 1:
        raise ConfigError("emissions must be a non-empty n x L matrix")
    L = emissions.shape[1]
    if transitions.shape != (L + 2, L + 2):
        raise ConfigError(f"transitions must be {(L + 2, L + 2)}, got {transitions.shape}")
    return emissions, transitions


def path_score(emissions, transitions, path) -> float:
    emissions, transitions = _check(emissions, transitions)
    L = emissions.shape[1]
    s = transitions[L, path[0]] + transitions[path[-1], L + 1]
    for i, y in enumerate(path):
        s += emissions[i, y]
        if i:
            s += transitions[path[i - 1], y]
    return float(s)


def viterbi(emissions, transitions) -> tuple[list[int], float]:
    """Highest-scoring label path; ties go to the lower label index."""
    emissions, transitions = _check(emissions, transitions)
    n, L = emissions.shape
    trans = transitions[:L, :L]
    delta = transitions[L, :L] + emissions[0]
    back = np.zeros((n, L), dtype=np.int64)
    for i in range(1, n):
        cand = delta[:, None] + trans
        back[i] = np.argmax(cand, axis=0)
        delta = cand[back[i], np.arange(L)] + emissions[i]
    final = delta + transitions[:L, L + 1]
    y = int(np.argmax(final))
    best = float(final[y])
    path = [y]
    for i in range(n - 1, 0, -1):
        y = int(back[i, y])
        path.append(y)
    return path[::-1], best


def forward(emissions, transitions) -> tuple[np.ndarray, float]:
    """Log-space forward variables ``alpha`` (n x L) and the log partition."""
    emissions, transitions = _check(emissions, transitions)
    n, L = emissions.shape
    trans = transitions[:L, :L]
    alpha = np.empty((n, L))
    alpha[0] = transitions[L, :L] + emissions[0]
    for i in range(1, n):
        alpha[i] = _logsumexp(alpha[i - 1][:, None] + trans, axis=0) + emissions[i]
    return alpha, float(_logsumexp(alpha[-1] + transitions[:L, L + 1], axis=0))


def backward(emissions, transitions) -> np.ndarray:
    emissions, transitions = _check(emissions, transitions)
    n, L = emissions.shape
    trans = transitions[:L, :L]
    beta = np.empty((n, L))
    beta[-1] = transitions[:L, L + 1]
    for i in range(n - 2, -1, -1):
        beta[i] = _logsumexp(trans + (emissions[i + 1] + beta[i + 1])[None, :], axis=1)
    return beta


def log_partition(emissions, transitions) -> float:
    return forward(emissions, transitions)[1]


def marginals(emissions, transitions):
    """``(log_z, unary, pairwise)`` posterior marginals.

    ``unary[i, y]`` is P(y_i = y); ``pairwise[i, a, b]`` is
    P(y_i = a, y_{i+1} = b) for ``i < n - 1``.
    """
    emissions, transitions = _check(emissions, transitions)
    n, L = emissions.shape
    alpha, log_z = forward(emissions, transitions)
    beta = backward(emissions, transitions)
    unary = np.exp(alpha + beta - log_z)
    trans = transitions[:L, :L]
    pairwise = np.exp(
        alpha[:-1, :, None] + trans[None, :, :] + (emissions[1:] + beta[1:])[:, None, :] - log_z
    )
    return log_z, unary, pairwise


def _nll_emission_grad(emissions, transitions, gold):
    """Loss and gradients w.r.t. emissions (n x L) and transitions."""
    n, L = emissions.shape
    log_z, unary, pairwise = marginals(emissions, transitions)
    loss = log_z - path_score(emissions, transitions, gold)
    d_em = unary.copy()
    d_em[np.arange(n), gold] -= 1.0
    d_tr = np.zeros_like(transitions)
    d_tr[:L, :L] = pairwise.sum(axis=0)
    d_tr[L, :L] = unary[0]
    d_tr[:L, L + 1] = unary[-1]
    for i in range(1, n):
        d_tr[gold[i - 1], gold[i]] -= 1.0
    d_tr[L, gold[0]] -= 1.0
    d_tr[gold[-1], L + 1] -= 1.0
    return loss, d_em, d_tr


def nll_and_gradient(model: CrfModel, window, gold_tags):
    """Negative log-likelihood of the gold core tags and its gradients ``(loss, dW, dT)``.

    ``window`` is a :class:`Window` (only core positions are scored) or a
    precomputed design matrix for the chain positions.
    """
    X = model.featurize_window(window) if isinstance(window, Window) else window
    gold = [model.label_index(t) if isinstance(t, str) else int(t) for t in gold_tags]
    if X.shape[0] != len(gold):
        raise ConfigError(f"{len(gold)} gold tags for {X.shape[0]} positions")
    em = score_window(model, X)
    loss, d_em, d_tr = _nll_emission_grad(em, model.transitions(), gold)
    dW = np.asarray(X.T @ d_em)
    return loss, dW, d_tr


# ---------------------------------------------------------------------------
# training


def build_label_set(tag_sequences, scheme: str) -> tuple:
    labels = set()
    for seq in tag_sequences:
        for t in seq:
            p, lab = tagcodec.split_tag(t)
            if lab:
                labels.add(lab)
    return tuple(tagcodec.tag_set(labels, scheme))


def _entity_f1(gold_seqs, pred_seqs) -> float:
    tp = n_gold = n_pred = 0
    for k, (g, p) in enumerate(zip(gold_seqs, pred_seqs)):
        gs = set(tagcodec.chunks(g))
        ps = set(tagcodec.chunks(p))
        tp += len(gs & ps)
        n_gold += len(gs)
        n_pred += len(ps)
    prec = tp / n_pred if n_pred else 0.0
    rec = tp / n_gold if n_gold else 0.0
    return 2 * prec * rec / (prec + rec) if prec + rec else 0.0


class _Adam:
    def __init__(self, shapes, cfg: TrainConfig):
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0
        self.cfg = cfg

    def step(self, params, grads):
        c = self.cfg
        self.t += 1
        bc1 = 1 - c.beta1 ** self.t
        bc2 = 1 - c.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            m *= c.beta1
            m += (1 - c.beta1) * g
            v *= c.beta2
            v += (1 - c.beta2) * g * g
            if c.weight_decay:
                p -= c.learning_rate * c.weight_decay * p
            p -= c.learning_rate * (m / bc1) / (np.sqrt(v / bc2) + c.eps)

    def grow(self, index, rows):
        """Extend moment buffers of parameter ``index`` by ``rows`` zero rows."""
        for buf in (self.m, self.v):
            extra = np.zeros((rows,) + buf[index].shape[1:])
            buf[index] = np.vstack([buf[index], extra])


def _core_tags(tags, window: Window):
    tags = tags.tags if isinstance(tags, TagSequence) else tuple(tags)
    if len(tags) == len(window.tokens) and window.left_context_len + window.right_context_len > 0:
        r = window.core_range
        return tags[r.start:r.stop]
    return tags


def train(
    train_data,
    dev_data=None,
    config: Optional[TrainConfig] = None,
    scheme: str = BIOSE,
    extractor: Optional[FeatureExtractor] = None,
    init: Optional[CrfModel] = None,
    on_epoch: Optional[Callable[[EpochRecord], None]] = None,
) -> CrfModel:
    """Fit a CRF by mini-batch AdamW on the mean window NLL.

    ``train_data`` and ``dev_data`` are sequences of ``(window, tags)``
    pairs; ``tags`` cover the window's core (or the whole window). The
    returned model is the snapshot chosen by the stopping rule: the epoch
    with the lowest full training loss, or the highest dev entity F1. Epoch
    0 (the initial weights) takes part in the selection. ``init`` warm
    starts from an existing model whose label set is kept; features new to
    it are appended with zero weights.
    """
    config = config or TrainConfig()
    scheme = tagcodec.check_scheme(scheme)
    train_data = list(train_data)
    if not train_data:
        raise TrainingError("training set is empty")
    if config.early_stopping == BY_DEV and not dev_data:
        raise TrainingError("early stopping by dev F1 requires dev data")
    golds = [_core_tags(t, w) for w, t in train_data]

    if init is not None:
        model = init.copy()
        model.constrained = config.constrained
        if model.scheme != scheme:
            raise ConfigError(f"initial model uses {model.scheme}, training requested {scheme}")
        extractor = model.extractor
    else:
        extractor = extractor or FeatureExtractor()
        model = CrfModel.zeros(build_label_set(golds, scheme), {}, scheme, extractor, config.constrained)

    missing = {t for g in golds for t in g if t not in model._label_index}
    if missing:
        raise TrainingError(f"training tags outside the model label set: {sorted(missing)}")

    feats = []
    alphabet = dict(model.features)
    for w, _ in train_data:
        fs = extractor.extract(w.tokens, w.core_range)
        for tok_feats in fs:
            for f in tok_feats:
                if f not in alphabet:
                    alphabet[f] = len(alphabet)
        feats.append(fs)
    if len(alphabet) > len(model.features):
        extra = len(alphabet) - len(model.features)
        model = CrfModel(
            model.labels, alphabet, np.vstack([model.W, np.zeros((extra, model.n_labels))]),
            model.T, model.scheme, extractor, model.constrained,
        )
    X = [_design_matrix(fs, model.features) for fs in feats]
    Y = [np.array([model.label_index(t) for t in g], dtype=np.int64) for g in golds]
    del feats

    dev = None
    if dev_data:
        dev = [(w, TagSequence(_core_tags(t, w), scheme)) for w, t in dev_data]

    def full_loss(m: CrfModel) -> float:
        trans = m.transitions()
        total = 0.0
        for x, y in zip(X, Y):
            em = np.asarray(x @ m.W)
            total += log_partition(em, trans) - path_score(em, trans, y)
        return total / len(X)

    def dev_f1(m: CrfModel) -> Optional[float]:
        if dev is None:
            return None
        preds = []
        for w, _ in dev:
            p = predict_window(m, w)
            if not tagcodec.is_valid(p):
                p, _ = tagcodec.repair(p)
            preds.append(p)
        return _entity_f1([g for _, g in dev], preds)

    rng = np.random.default_rng(config.seed)
    opt = _Adam([model.W.shape, model.T.shape], config)
    by_dev = config.early_stopping == BY_DEV

    def record(epoch):
        rec = EpochRecord(epoch, full_loss(model), dev_f1(model))
        log.info("%s", rec)
        if on_epoch is not None:
            on_epoch(rec)
        return rec

    history = []
    rec = record(0)
    history.append(rec)
    best = model.copy()
    best_key = rec.dev_f1 if by_dev else -rec.loss
    stale = 0
    for epoch in range(1, config.epochs + 1):
        order = rng.permutation(len(X))
        for b in range(0, len(order), config.batch_size):
            batch = order[b:b + config.batch_size]
            trans = model.transitions()
            d_em_rows, xs = [], []
            d_tr = np.zeros_like(model.T)
            for k in batch:
                em = np.asarray(X[k] @ model.W)
                _, d_em, dt = _nll_emission_grad(em, trans, Y[k])
                d_em_rows.append(d_em)
                xs.append(X[k])
                d_tr += dt
            gW = np.asarray(sp.vstack(xs).T @ np.vstack(d_em_rows)) / len(batch)
            gT = d_tr / len(batch)
            opt.step([model.W, model.T], [gW, gT])
        rec = record(epoch)
        history.append(rec)
        key = rec.dev_f1 if by_dev else -rec.loss
        if key > best_key:
            best, best_key, stale = model.copy(), key, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    best.history = history
    return best


# ---------------------------------------------------------------------------
# prediction


def predict_window(model: CrfModel, window: Window) -> TagSequence:
    """Viterbi tags for the window's core tokens."""
    if not window.core_range:
        return TagSequence((), model.scheme)
    em = score_window(model, model.featurize_window(window))
    path, _ = viterbi(em, model.transitions())
    return TagSequence(tuple(model.labels[y] for y in path), model.scheme)


def predict(model: CrfModel, windows: Sequence[Window]) -> TagSequence:
    """Tags for one document: core predictions of its windows, concatenated.

    Unconstrained models may emit ungrammatical sequences; those are
    repaired before returning.
    """
    tags = []
    for w in windows:
        tags.extend(predict_window(model, w).tags)
    seq = TagSequence(tuple(tags), model.scheme)
    if not model.constrained and not tagcodec.is_valid(seq):
        seq, _ = tagcodec.repair(seq)
    return seq


# ---------------------------------------------------------------------------
# serialization


def _w_str(f, s):
    b = s.encode("utf-8")
    f.write(struct.pack("<I", len(b)))
    f.write(b)


def _r_exact(f, n):
    b = f.read(n)
    if len(b) != n:
        raise FormatError("unexpected end of model file")
    return b


def _r_str(f):
    (n,) = struct.unpack("<I", _r_exact(f, 4))
    return _r_exact(f, n).decode("utf-8")


def _w_strs(f, items):
    f.write(struct.pack("<I", len(items)))
    for s in items:
        _w_str(f, s)


def _r_strs(f):
    (n,) = struct.unpack("<I", _r_exact(f, 4))
    return [_r_str(f) for _ in range(n)]


def save_model(model: CrfModel, path) -> None:
    ex = model.extractor
    feats = sorted(model.features, key=model.features.__getitem__)
    with open(path, "wb") as f:
        f.write(MAGIC)
        f.write(struct.pack("<I", model.version))
        _w_str(f, model.scheme)
        f.write(struct.pack("<BII", int(model.constrained), ex.affix_len, ex.neighbors))
        _w_strs(f, list(model.labels))
        _w_strs(f, feats)
        if ex.embedding is None:
            f.write(struct.pack("<B", 0))
        else:
            emb = ex.embedding
            words = sorted(emb.vocabulary, key=emb.vocabulary.__getitem__)
            f.write(struct.pack("<BI", 1, emb.dim))
            _w_strs(f, words)
            f.write(emb.bins.astype(np.uint8).tobytes(order="C"))
        f.write(model.W.astype("<f8").tobytes(order="C"))
        f.write(model.T.astype("<f8").tobytes(order="C"))


def load_model(path) -> CrfModel:
    with open(path, "rb") as f:
        if f.read(len(MAGIC)) != MAGIC:
            raise FormatError(f"{path}: not a CRF model file")
        (version,) = struct.unpack("<I", _r_exact(f, 4))
        if version != VERSION:
            raise VersionError(f"{path}: model format version {version}, this build reads {VERSION}")
        scheme = _r_str(f)
        constrained, affix_len, neighbors = struct.unpack("<BII", _r_exact(f, 9))
        labels = _r_strs(f)
        feats = _r_strs(f)
        (has_emb,) = struct.unpack("<B", _r_exact(f, 1))
        emb = None
        if has_emb:
            (dim,) = struct.unpack("<I", _r_exact(f, 4))
            words = _r_strs(f)
            bins = np.frombuffer(_r_exact(f, len(words) * dim), dtype=np.uint8).reshape(len(words), dim)
            emb = EmbeddingBins({w: i for i, w in enumerate(words)}, bins.copy())
        L, F = len(labels), len(feats)
        W = np.frombuffer(_r_exact(f, 8 * F * L), dtype="<f8").reshape(F, L).astype(np.float64)
        T = np.frombuffer(_r_exact(f, 8 * (L + 2) ** 2), dtype="<f8").reshape(L + 2, L + 2).astype(np.float64)
        if f.read(1):
            raise FormatError(f"{path}: trailing bytes")
    return CrfModel(
        tuple(labels), {w: i for i, w in enumerate(feats)}, W, T, scheme,
        FeatureExtractor(emb, affix_len, neighbors), bool(constrained), version,
    )
