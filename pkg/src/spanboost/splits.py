"""Strategic datasplits: document vectors -> PCA -> equal-size k-means.

Documents that end up in the same cluster are similar to each other and
dissimilar to the rest, so holding one cluster out for validation gives a
harder split than a random one.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .corpus_io import tokenize
from .embeddings import doc_vector
from .errors import ConfigError, FormatError, ZeroVarianceError

STRATEGIC = "strategic"
RANDOM = "random"


@dataclass(frozen=True)
class SplitConfig:
    k: int = 5
    pca_dims: int = 5
    seed: int = 0
    mode: str = STRATEGIC

    def __post_init__(self):
        if self.k < 2:
            raise ConfigError(f"k must be >= 2, got {self.k}")
        if self.pca_dims < 1:
            raise ConfigError(f"pca_dims must be >= 1, got {self.pca_dims}")
        if self.mode not in (STRATEGIC, RANDOM):
            raise ConfigError(f"unknown split mode {self.mode!r}")


@dataclass
class SplitPlan:
    assignment: dict  # doc id -> cluster
    k: int
    centroids: Optional[np.ndarray] = None
    config: Optional[SplitConfig] = None
    embedding_variant: str = ""
    projected: Optional[np.ndarray] = field(default=None, repr=False)  # rows follow doc_ids
    doc_ids: list = field(default_factory=list, repr=False)
    history: list = field(default_factory=list, repr=False)  # k-means objective per iteration

    @property
    def sizes(self) -> list[int]:
        counts = [0] * self.k
        for c in self.assignment.values():
            counts[c] += 1
        return counts

    def members(self, cluster: int) -> list[str]:
        return sorted(d for d, c in self.assignment.items() if c == cluster)

    def partition(self, docs, dev_cluster: int):
        """``(train_docs, dev_docs)`` holding out ``dev_cluster``."""
        if not 0 <= dev_cluster < self.k:
            raise ConfigError(f"dev cluster {dev_cluster} outside [0, {self.k})")
        missing = [d.id for d in docs if d.id not in self.assignment]
        if missing:
            raise ConfigError(f"documents missing from the plan: {missing[:5]}")
        train = [d for d in docs if self.assignment[d.id] != dev_cluster]
        dev = [d for d in docs if self.assignment[d.id] == dev_cluster]
        return train, dev


# ---------------------------------------------------------------------------
# PCA


def _dominant_eigvec(a: np.ndarray, basis: list, v0: np.ndarray, tol: float, max_iter: int):
    def orth(v):
        for b in basis:
            v = v - (b @ v) * b
        return v

    scale = max(np.abs(a).max(), 1e-300)
    v = orth(v0)
    nv = np.linalg.norm(v)
    if nv == 0:
        return None
    v /= nv
    for _ in range(max_iter):
        w = orth(a @ v)
        nw = np.linalg.norm(w)
        if nw <= 1e-13 * scale:
            return v  # remaining spectrum is numerically zero
        w /= nw
        if np.linalg.norm(w - v) < tol:
            v = w
            break
        v = w
    return v


def pca(vectors, target_dims: int, tol: float = 1e-12, max_iter: int = 10000):
    """Principal components by power iteration with deflation.

    Returns ``(components, projected, explained_variance)`` where
    ``components`` has orthonormal rows, ``projected`` is the centered data
    times ``components.T`` and variances use the ``n - 1`` denominator.
    Component signs are fixed so the largest-magnitude entry is positive.
    """
    x = np.asarray(vectors, dtype=np.float64)
    if x.ndim != 2:
        raise ConfigError("vectors must be an n x d matrix")
    n, d = x.shape
    if n < 2:
        raise ConfigError("PCA needs at least two vectors")
    if not 1 <= target_dims <= min(n - 1, d):
        raise ConfigError(f"target_dims must lie in [1, {min(n - 1, d)}], got {target_dims}")
    centered = x - x.mean(axis=0)
    cov = centered.T @ centered / (n - 1)
    total = np.trace(cov)
    if total <= 0:
        raise ZeroVarianceError("zero variance: all vectors are identical")
    comps: list = []
    variances = []
    a = cov.copy()
    for j in range(target_dims):
        v = None
        # deterministic starts: a dense vector, then coordinate axes as fallbacks
        starts = [np.linspace(1.0, 2.0, d)] + [np.eye(d)[i] for i in range(d)]
        for s in starts:
            v = _dominant_eigvec(a, comps, s, tol, max_iter)
            if v is not None:
                break
        for b in comps:  # final re-orthogonalization
            v = v - (b @ v) * b
        v /= np.linalg.norm(v)
        i = np.argmax(np.abs(v))
        if v[i] < 0:
            v = -v
        lam = float(v @ cov @ v)
        comps.append(v)
        variances.append(max(lam, 0.0))
        a = a - lam * np.outer(v, v)
    components = np.array(comps)
    projected = centered @ components.T
    return components, projected, variances


# ---------------------------------------------------------------------------
# balanced k-means


def _kmeanspp(points: np.ndarray, k: int, rng) -> np.ndarray:
    n = len(points)
    centers = [points[rng.integers(n)]]
    for _ in range(1, k):
        d2 = np.min(((points[:, None, :] - np.array(centers)[None]) ** 2).sum(-1), axis=1)
        total = d2.sum()
        if total <= 0:
            centers.append(points[rng.integers(n)])
        else:
            centers.append(points[rng.choice(n, p=d2 / total)])
    return np.array(centers, dtype=np.float64)


def _sq_dists(points, centroids):
    return ((points[:, None, :] - centroids[None, :, :]) ** 2).sum(-1)


def _capacity_assign(dist: np.ndarray, k: int) -> np.ndarray:
    n = len(dist)
    floor, extra = divmod(n, k)
    ranked = np.argsort(dist, axis=1, kind="stable")
    if k > 1:
        rows = np.arange(n)
        margin = dist[rows, ranked[:, 0]] - dist[rows, ranked[:, 1]]
    else:
        margin = np.zeros(n)
    order = np.lexsort((np.arange(n), margin))
    sizes = np.zeros(k, dtype=np.int64)
    big = 0
    out = np.full(n, -1, dtype=np.int64)
    for i in order:
        for c in ranked[i]:
            if sizes[c] < floor:
                break
            if sizes[c] == floor and big < extra:
                big += 1
                break
        else:  # pragma: no cover - capacities always sum to n
            raise RuntimeError("no cluster capacity left")
        out[i] = c
        sizes[c] += 1
    return out


def _objective(points, labels, centroids) -> float:
    return float(((points - centroids[labels]) ** 2).sum())


def balanced_kmeans(points, k: int, seed: int = 0, max_iter: int = 100, ids: Optional[Sequence[str]] = None) -> SplitPlan:
    """k-means whose cluster sizes differ by at most one.

    k-means++ seeding, then each iteration assigns points in order of how
    strongly they prefer their nearest centroid (nearest minus second
    nearest distance), each to the closest centroid that still has room.
    An assignment that would not lower the objective ends the loop, so the
    objective never increases.
    """
    x = np.asarray(points, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n = len(x)
    if k < 1:
        raise ConfigError("k must be >= 1")
    if n < k:
        raise ConfigError(f"cannot form {k} clusters from {n} points")
    rng = np.random.default_rng(seed)
    centroids = _kmeanspp(x, k, rng)
    labels = _capacity_assign(_sq_dists(x, centroids), k)
    centroids = _update_centroids(x, labels, centroids)
    history = [_objective(x, labels, centroids)]
    for _ in range(max_iter - 1):
        new = _capacity_assign(_sq_dists(x, centroids), k)
        if np.array_equal(new, labels):
            break
        if _objective(x, new, centroids) >= _objective(x, labels, centroids):
            break
        labels = new
        centroids = _update_centroids(x, labels, centroids)
        history.append(_objective(x, labels, centroids))
    if ids is None:
        ids = [str(i) for i in range(n)]
    return SplitPlan(
        {d: int(c) for d, c in zip(ids, labels)}, k, centroids,
        doc_ids=list(ids), projected=x, history=history,
    )


def _update_centroids(x, labels, old):
    out = old.copy()
    for c in range(len(old)):
        members = x[labels == c]
        if len(members):
            out[c] = members.mean(axis=0)
    return out


# ---------------------------------------------------------------------------
# plans


def document_vectors(documents, model, subword_vocab=None) -> np.ndarray:
    return np.array([doc_vector(tokenize(d, subword_vocab), model) for d in documents])


def make_plan(documents, model=None, config: SplitConfig = SplitConfig(), subword_vocab=None) -> SplitPlan:
    """Assign every document to one of ``config.k`` near-equal folds.

    Documents are processed in id order, so the result does not depend on
    the order they are passed in.
    """
    docs = sorted(documents, key=lambda d: d.id)
    ids = [d.id for d in docs]
    if len(set(ids)) != len(ids):
        raise ConfigError("document ids must be unique")
    if len(docs) < config.k:
        raise ConfigError(f"need at least {config.k} documents, got {len(docs)}")
    if config.mode == RANDOM:
        rng = np.random.default_rng(config.seed)
        perm = rng.permutation(len(ids))
        assignment = {ids[j]: int(pos % config.k) for pos, j in enumerate(perm)}
        return SplitPlan(assignment, config.k, None, config, getattr(model, "variant", ""), doc_ids=ids)
    if model is None:
        raise ConfigError("strategic splits need an embedding model")
    vecs = document_vectors(docs, model, subword_vocab)
    dims = min(config.pca_dims, vecs.shape[1], len(docs) - 1)
    _, projected, _ = pca(vecs, dims)
    plan = balanced_kmeans(projected, config.k, config.seed, ids=ids)
    plan.config = config
    plan.embedding_variant = model.variant
    return plan


def export_plan_2d(plan: SplitPlan, projected=None) -> list[tuple[str, float, float, int]]:
    """Rows ``(doc_id, x, y, cluster)`` from the first two PCA coordinates."""
    pts = plan.projected if projected is None else np.asarray(projected)
    if pts is None:
        raise ConfigError("plan carries no projected points")
    rows = []
    for doc_id, p in zip(plan.doc_ids, pts):
        x = float(p[0])
        y = float(p[1]) if len(p) > 1 else 0.0
        rows.append((doc_id, x, y, plan.assignment[doc_id]))
    return rows


def format_plan_2d(rows) -> str:
    lines = ["doc_id\tx\ty\tcluster"]
    lines += [f"{d}\t{x:.10g}\t{y:.10g}\t{c}" for d, x, y, c in rows]
    return "\n".join(lines) + "\n"


def save_plan(plan: SplitPlan, path) -> None:
    cfg = plan.config or SplitConfig(k=plan.k)
    lines = [
        "# splitplan 1",
        f"# k={plan.k}",
        f"# pca_dims={cfg.pca_dims}",
        f"# seed={cfg.seed}",
        f"# mode={cfg.mode}",
        f"# embedding={plan.embedding_variant}",
    ]
    lines += [f"{d}\t{plan.assignment[d]}" for d in sorted(plan.assignment)]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_plan(path) -> SplitPlan:
    header = {}
    assignment = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        if line.startswith("#"):
            key, sep, val = line[1:].strip().partition("=")
            if sep:
                header[key] = val
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'doc_id<TAB>cluster'")
        assignment[parts[0]] = int(parts[1])
    try:
        cfg = SplitConfig(int(header["k"]), int(header["pca_dims"]), int(header["seed"]), header["mode"])
    except KeyError as e:
        raise FormatError(f"{path}: missing header field {e}") from None
    return SplitPlan(assignment, cfg.k, None, cfg, header.get("embedding", ""), doc_ids=sorted(assignment))
