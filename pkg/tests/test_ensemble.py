import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spanboost.crf import TrainConfig
from spanboost.ensemble import (
    PREFER_O,
    EnsembleConfig,
    VoteStats,
    compose_submission,
    load_ensemble_file,
    majority,
    order_members,
    recipe_members,
    run_cv_ensemble,
    vote,
)
from spanboost.errors import ConfigError
from spanboost.pipeline import Preprocessor, train_on_documents
from spanboost.splits import SplitConfig, make_plan
from spanboost.synthetic import generate_corpus
from spanboost.tagcodec import BIO, BIOSE, TagSequence, is_valid


def bio(*tags):
    return TagSequence(tags, BIO)


def test_strict_majority():
    assert vote([bio("B-X"), bio("B-X"), bio("O")]).tags == ("B-X",)


def test_unanimous_members():
    s = bio("O", "B-X", "I-X", "O")
    assert vote([s, s, s]) == s


def test_priority_tie():
    assert vote([bio("B-X"), bio("O")]).tags == ("B-X",)
    assert vote([bio("O"), bio("B-X")]).tags == ("O",)
    cfg = EnsembleConfig(("m1", "m2"), PREFER_O)
    assert vote([bio("B-X"), bio("O")], cfg).tags == ("O",)


def test_biose_members_vote_in_bio():
    a = TagSequence(("B-X", "E-X"), BIOSE)
    b = TagSequence(("B-X", "I-X"), BIO)
    assert vote([a, a, b]).tags == ("B-X", "I-X")


def test_vote_output_is_repaired():
    raw = majority([bio("O", "I-X"), bio("O", "I-X"), bio("B-X", "I-X")])
    assert raw.tags == ("O", "I-X")
    assert vote([bio("O", "I-X"), bio("O", "I-X"), bio("B-X", "I-X")]).tags == ("O", "B-X")


def test_config_errors():
    with pytest.raises(ConfigError):
        EnsembleConfig(())
    with pytest.raises(ConfigError):
        EnsembleConfig(("a", "a"))
    with pytest.raises(ConfigError):
        EnsembleConfig(("a",), "coin-flip")
    with pytest.raises(ConfigError):
        vote([bio("O"), bio("O", "O")])


def test_vote_stats():
    assert VoteStats(200, 1).repaired_fraction == 0.005
    assert VoteStats().repaired_fraction == 0.0


def test_member_order():
    assert order_members(["a", "b", "c"], {"a": 0.5, "b": 0.9}) == ["b", "a", "c"]
    assert order_members(["a", "b"], None) == ["a", "b"]
    assert order_members(["a", "b"], {"a": 0.5, "b": 0.5}) == ["a", "b"]


tag = st.sampled_from(["O", "B-X", "I-X", "B-Y", "I-Y"])


@st.composite
def member_sets(draw):
    n = draw(st.integers(1, 12))
    k = draw(st.integers(1, 6))
    return [bio(*draw(st.lists(tag, min_size=n, max_size=n))) for _ in range(k)]


@given(member_sets())
@settings(max_examples=400, deadline=None)
def test_vote_laws(members):
    out = vote(members)
    assert len(out) == len(members[0]) and is_valid(out)
    assert vote(members + members) == out
    cfg = EnsembleConfig(tuple(range(len(members))), PREFER_O)
    ref = vote(members, cfg)
    rng = np.random.default_rng(len(members))
    for _ in range(3):
        perm = [members[i] for i in rng.permutation(len(members))]
        assert vote(perm, cfg) == ref


def test_prefer_o_non_o_tie_is_canonical():
    cfg = EnsembleConfig(("a", "b"), PREFER_O)
    assert vote([bio("B-Y"), bio("B-X")], cfg).tags == ("B-X",)
    assert vote([bio("B-X"), bio("B-Y")], cfg).tags == ("B-X",)


def test_noise_reduction_small_sample():
    wins = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        tags = ["O", "B-X", "I-X", "B-Y", "I-Y"]
        gold = [tags[i] for i in rng.integers(0, 5, 200)]
        gold = list(vote([bio(*gold)]).tags)
        members = []
        for _ in range(5):
            m = [t if rng.random() >= 0.2 else rng.choice([u for u in tags if u != t]) for t in gold]
            members.append(bio(*m))
        err = lambda s: np.mean([a != b for a, b in zip(s.tags, gold)])
        wins += err(vote(members)) < np.mean([err(m) for m in members])
    assert wins >= 19


# -- recipes and cv ensembles ------------------------------------------------------------------


def test_recipe_member_counts():
    assert len(recipe_members("s1")) == 1
    assert len(recipe_members("s2")) == 3
    assert len(recipe_members("s3_clean")) == 15
    assert len(recipe_members("s3_submitted")) == 16
    assert len(recipe_members("s4")) == 3
    assert len(recipe_members("s5")) == 21
    assert recipe_members("s1") == ["full/domain-adapted"]
    assert "transfer/general-adapted" in recipe_members("s3_submitted")
    with pytest.raises(ConfigError):
        recipe_members("s9")


@pytest.fixture(scope="module")
def small_corpus():
    pairs = generate_corpus(24, seed=5)
    return [p.task1 for p in pairs[:18]], [p.task1 for p in pairs[18:]]


def test_cv_ensemble_members(small_corpus):
    train, test = small_corpus
    plan = make_plan(train, None, SplitConfig(k=3, mode="random"))
    cfg = TrainConfig(epochs=2)
    res = run_cv_ensemble(train, plan, {"v": None}, cfg, test)
    assert sorted(res.models) == ["cv/v/0", "cv/v/1", "cv/v/2"]
    assert len(res.predictions) == len(test)
    assert sorted(res.order) == sorted(res.models)
    scores = [res.dev_f1[m] for m in res.order]
    assert scores == sorted(scores, reverse=True)


def test_compose_single_and_identical(small_corpus):
    train, test = small_corpus
    pre = Preprocessor()
    model = train_on_documents(train, None, TrainConfig(epochs=2), pre)
    arts = {m: model for m in recipe_members("s5")}
    s1 = compose_submission("s1", arts, test, pre)
    assert not s1.voted and s1.stats is None
    s2 = compose_submission("s2", arts, test, pre)
    assert s2.voted and s2.predictions == s1.predictions
    assert s2.stats.repaired == 0
    with pytest.raises(ConfigError):
        compose_submission("s2", {}, test, pre)


def test_ensemble_file(tmp_path):
    p = tmp_path / "e.cfg"
    p.write_text("# members by priority\nmembers=a.crf, /abs/b.crf\ntie_break=prefer-o\n", encoding="utf-8")
    cfg = load_ensemble_file(p)
    assert cfg.members == (str(tmp_path / "a.crf"), "/abs/b.crf") and cfg.tie_break == PREFER_O
    p.write_text("tie_break=priority\n", encoding="utf-8")
    with pytest.raises(ConfigError):
        load_ensemble_file(p)
