"""Independent reference implementations used as test oracles.

Everything here is deliberately naive: enumeration over all label paths,
explicit loops over token pairs, central finite differences.
"""

import itertools
import math

import numpy as np


def all_paths(n, L):
    return itertools.product(range(L), repeat=n)


def brute_path_score(em, tr, path):
    L = em.shape[1]
    s = tr[L, path[0]] + tr[path[-1], L + 1]
    for i, y in enumerate(path):
        s += em[i, y]
        if i:
            s += tr[path[i - 1], y]
    return s


def brute_viterbi(em, tr):
    """Best path by enumeration; ties go to the lexicographically smallest path."""
    best, best_path = -math.inf, None
    for p in all_paths(*em.shape):
        s = brute_path_score(em, tr, p)
        if s > best:
            best, best_path = s, list(p)
    return best_path, best


def brute_log_partition(em, tr):
    scores = [brute_path_score(em, tr, p) for p in all_paths(*em.shape)]
    m = max(scores)
    if m == -math.inf:
        return -math.inf
    return m + math.log(sum(math.exp(s - m) for s in scores))


def brute_marginals(em, tr):
    n, L = em.shape
    log_z = brute_log_partition(em, tr)
    unary = np.zeros((n, L))
    for p in all_paths(n, L):
        w = math.exp(brute_path_score(em, tr, p) - log_z)
        for i, y in enumerate(p):
            unary[i, y] += w
    return unary


def random_instance(rng, n_max=4, L_max=4, scale=2.0):
    n = int(rng.integers(1, n_max + 1))
    L = int(rng.integers(1, L_max + 1))
    em = rng.normal(scale=scale, size=(n, L))
    tr = rng.normal(scale=scale, size=(L + 2, L + 2))
    return em, tr


def central_difference(f, x, eps=1e-4):
    """Gradient of scalar ``f`` at array ``x`` by central differences."""
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        idx = it.multi_index
        old = x[idx]
        x[idx] = old + eps
        fp = f()
        x[idx] = old - eps
        fm = f()
        x[idx] = old
        g[idx] = (fp - fm) / (2 * eps)
    return g


def brute_cooccurrence(stream, window):
    """Dict ``(w, c) -> weight`` with 1/distance weights, both directions."""
    out = {}
    for i, w in enumerate(stream):
        for j in range(max(0, i - window), min(len(stream), i + window + 1)):
            if j != i:
                key = (w, stream[j])
                out[key] = out.get(key, 0.0) + 1.0 / abs(i - j)
    return out


def brute_ppmi(counts):
    """PPMI from a pair-count dict via the probability definitions."""
    total = sum(counts.values())
    pw, pc = {}, {}
    for (w, c), v in counts.items():
        pw[w] = pw.get(w, 0.0) + v / total
        pc[c] = pc.get(c, 0.0) + v / total
    return {k: max(0.0, math.log((v / total) / (pw[k[0]] * pc[k[1]]))) for k, v in counts.items()}


def brute_spans_bio(tags):
    """Entities of a valid BIO tag list as ``(start, end_exclusive, label)``."""
    out, start, label = [], None, None
    for i, t in enumerate(list(tags) + ["O"]):
        if start is not None and not (t.startswith("I-") and t[2:] == label):
            out.append((start, i, label))
            start = None
        if t.startswith("B-"):
            start, label = i, t[2:]
    return out
