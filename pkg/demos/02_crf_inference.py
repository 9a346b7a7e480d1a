"""Exact CRF inference on a toy chain, checked against enumeration."""

# %%
import itertools

import numpy as np

from spanboost.crf import log_partition, marginals, path_score, viterbi

rng = np.random.default_rng(0)
n, L = 4, 3
emissions = rng.normal(size=(n, L))
# rows/columns L and L+1 are the begin and end states
transitions = rng.normal(size=(L + 2, L + 2))

# %%
paths = list(itertools.product(range(L), repeat=n))
scores = np.array([path_score(emissions, transitions, p) for p in paths])
best, score = viterbi(emissions, transitions)
print("viterbi", best, round(score, 4), "enumeration", list(paths[int(scores.argmax())]))
print("log Z", log_partition(emissions, transitions), np.logaddexp.reduce(scores))

# %%
_, unary, _ = marginals(emissions, transitions)
print("per-position marginals (rows sum to 1):")
print(unary.round(3))

# %%
# Forbidding a transition removes every path that uses it.
a, b = best[0], best[1]
transitions[a, b] = -np.inf
print(f"forbid {a}->{b}:", viterbi(emissions, transitions)[0])
