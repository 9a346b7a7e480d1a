import numpy as np
import pytest

from spanboost.corpus_io import Document
from spanboost.embeddings import train_embeddings
from spanboost.errors import ConfigError, FormatError, ZeroVarianceError
from spanboost.splits import (
    SplitConfig,
    balanced_kmeans,
    export_plan_2d,
    format_plan_2d,
    load_plan,
    make_plan,
    pca,
    save_plan,
)
from spanboost.synthetic import generate_corpus, raw_corpus

# -- PCA --------------------------------------------------------------------------------


def test_pca_collinear():
    comps, proj, var = pca([[1, 1], [2, 2], [3, 3]], 2)
    assert np.allclose(comps[0], np.array([1, 1]) / np.sqrt(2))
    # projections are -sqrt(2), 0, sqrt(2): sample variance (2 + 0 + 2) / 2
    assert var[0] == pytest.approx(2.0)
    assert var[1] == pytest.approx(0.0, abs=1e-12)
    assert np.allclose(comps @ comps.T, np.eye(2), atol=1e-8)


def test_pca_axis_aligned():
    x = np.array([[2, 0], [-2, 0], [0, 1], [0, -1]], dtype=float)
    # variances 8/3 and 2/3: ratio 4:1 along the axes
    comps, _, var = pca(x, 2)
    assert np.allclose(np.abs(comps), np.eye(2), atol=1e-10)
    assert var[0] == pytest.approx(8 / 3) and var[1] == pytest.approx(2 / 3)


def test_pca_full_dims_preserves_distances():
    rng = np.random.default_rng(0)
    x = rng.normal(size=(12, 4))
    _, proj, _ = pca(x, 4)
    d1 = np.linalg.norm(x[:, None] - x[None], axis=-1)
    d2 = np.linalg.norm(proj[:, None] - proj[None], axis=-1)
    assert np.max(np.abs(d1 - d2)) <= 1e-8


def test_pca_matches_eigendecomposition():
    rng = np.random.default_rng(1)
    x = rng.normal(size=(30, 6)) * [5, 4, 3, 2, 1, 0.5]
    comps, _, var = pca(x, 3)
    c = np.cov(x, rowvar=False)
    w, v = np.linalg.eigh(c)
    order = np.argsort(-w)
    assert np.allclose(var, w[order[:3]], rtol=1e-8)
    for j in range(3):
        assert abs(abs(comps[j] @ v[:, order[j]]) - 1) <= 1e-8


def test_pca_errors():
    with pytest.raises(ZeroVarianceError):
        pca([[1, 2], [1, 2], [1, 2]], 1)
    with pytest.raises(ConfigError):
        pca([[1, 2], [3, 4]], 2)


# -- balanced k-means ----------------------------------------------------------------------


def test_ten_points_five_clusters():
    rng = np.random.default_rng(0)
    plan = balanced_kmeans(rng.normal(size=(10, 2)), 5)
    assert plan.sizes == [2] * 5


def test_separated_groups_recovered():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(5, 2)) * 0.1
    b = rng.normal(size=(5, 2)) * 0.1 + 10
    plan = balanced_kmeans(np.vstack([a, b]), 2)
    labels = [plan.assignment[str(i)] for i in range(10)]
    assert len(set(labels[:5])) == 1 and len(set(labels[5:])) == 1 and labels[0] != labels[5]


def test_identical_points():
    plan = balanced_kmeans(np.ones((7, 3)), 2)
    assert sorted(plan.sizes) == [3, 4]


def test_unbalanced_groups_still_balanced():
    # 8 tight points and 2 far away: plain k-means would give sizes 8/2
    x = np.vstack([np.zeros((8, 1)) + np.arange(8)[:, None] * 0.01, [[100.0], [101.0]]])
    plan = balanced_kmeans(x, 2, seed=3)
    assert plan.sizes == [5, 5]


def test_objective_non_increasing():
    rng = np.random.default_rng(4)
    for seed in range(20):
        plan = balanced_kmeans(rng.normal(size=(40, 3)), 4, seed=seed)
        assert all(b <= a + 1e-12 for a, b in zip(plan.history, plan.history[1:]))


# -- plans -----------------------------------------------------------------------------------


@pytest.fixture(scope="module")
def corpus_and_model():
    docs = [p.task1 for p in generate_corpus(30, seed=2)]
    model = train_embeddings([[t.lower() for t in s] for s in _token_lists(raw_corpus("domain", 60, 1))], 5, 20)
    return docs, model


def _token_lists(texts):
    from spanboost.corpus_io import tokenize

    return [[t.surface for t in tokenize(x)] for x in texts]


def test_random_mode_sizes():
    docs = [Document(f"d{i}", "x") for i in range(10)]
    plan = make_plan(docs, None, SplitConfig(k=5, mode="random"))
    assert plan.sizes == [2] * 5


def test_k1_rejected():
    with pytest.raises(ConfigError):
        SplitConfig(k=1)


def test_plan_order_invariant(corpus_and_model):
    docs, model = corpus_and_model
    a = make_plan(docs, model, SplitConfig(k=5, seed=7))
    b = make_plan(list(reversed(docs)), model, SplitConfig(k=5, seed=7))
    assert a.assignment == b.assignment
    assert max(a.sizes) - min(a.sizes) <= 1


def test_plan_partition(corpus_and_model):
    docs, model = corpus_and_model
    plan = make_plan(docs, model, SplitConfig(k=5))
    seen = []
    for c in range(5):
        train, dev = plan.partition(docs, c)
        assert len(train) + len(dev) == len(docs)
        assert {d.id for d in dev} == set(plan.members(c))
        seen += [d.id for d in dev]
    assert sorted(seen) == sorted(d.id for d in docs)
    with pytest.raises(ConfigError):
        plan.partition(docs, 5)


def test_plan_file_roundtrip(tmp_path, corpus_and_model):
    docs, model = corpus_and_model
    plan = make_plan(docs, model, SplitConfig(k=3, pca_dims=2, seed=4))
    p = tmp_path / "p.plan"
    save_plan(plan, p)
    again = load_plan(p)
    assert again.assignment == plan.assignment and again.k == 3
    assert again.config == plan.config
    text = p.read_text(encoding="utf-8")
    assert "# k=3" in text and "# seed=4" in text
    p.write_text(text + "broken line\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_plan(p)


def test_export_2d(corpus_and_model):
    docs, model = corpus_and_model
    plan = make_plan(docs, model, SplitConfig(k=5))
    rows = export_plan_2d(plan)
    assert len(rows) == len(docs)
    assert {r[0] for r in rows} == {d.id for d in docs}
    out = format_plan_2d(rows)
    assert out.splitlines()[0] == "doc_id\tx\ty\tcluster"
