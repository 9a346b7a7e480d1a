"""Count-based embeddings, document vectors and balanced clusters."""

# %%
import numpy as np

from spanboost.corpus_io import tokenize
from spanboost.embeddings import train_embeddings
from spanboost.splits import SplitConfig, export_plan_2d, make_plan
from spanboost.synthetic import generate_corpus, raw_corpus


def tokens(texts):
    return [[t.surface.lower() for t in tokenize(x)] for x in texts]


general = tokens(raw_corpus("general", 150, 1))
domain = tokens(raw_corpus("domain", 150, 1))
base = train_embeddings(general, window=5, dim=30)
# adapted: domain counts interpolated with the general ones
adapted = train_embeddings(domain, window=5, dim=30, base_corpus=general, lam=0.5, variant="domain-adapted")

# %%
def neighbours(model, word, k=4):
    unit = model.vectors / np.maximum(np.linalg.norm(model.vectors, axis=1, keepdims=True), 1e-12)
    sims = unit @ unit[model.index(word)]
    words = model.words
    return [words[i] for i in sims.argsort()[::-1] if words[i] != word][:k]


for m in (base, adapted):
    print(m.variant, neighbours(m, "cocinero"))

# %%
docs = [p.task1 for p in generate_corpus(40, seed=2)]
plan = make_plan(docs, adapted, SplitConfig(k=5, pca_dims=5, seed=0))
print("cluster sizes", plan.sizes)
for doc_id, x, y, c in export_plan_2d(plan)[:5]:
    print(f"{doc_id}  ({x:+.2f}, {y:+.2f})  cluster {c}")
