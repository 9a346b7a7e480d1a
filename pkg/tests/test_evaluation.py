import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spanboost.corpus_io import Document, SpanAnnotation
from spanboost.errors import ConfigError
from spanboost.evaluation import compare, evaluate, evaluate_spans


def keys(*spans):
    return [("d",) + s for s in spans]


def test_half_right():
    r = evaluate_spans(keys((0, 5, "A"), (10, 15, "B")), keys((0, 5, "A"), (20, 25, "B")))
    assert (r.precision, r.recall, r.f1) == (0.5, 0.5, 0.5)
    assert r.per_label["A"].f1 == 1.0 and r.per_label["B"].f1 == 0.0


def test_perfect_and_empty():
    g = keys((0, 5, "A"))
    assert evaluate_spans(g, g).f1 == 1.0
    r = evaluate_spans(g, [])
    assert (r.precision, r.recall, r.f1) == (0.0, 0.0, 0.0)
    assert evaluate_spans([], []).f1 == 0.0


def test_boundary_or_label_mismatch_is_wrong():
    r = evaluate_spans(keys((0, 5, "A")), keys((0, 4, "A"), (0, 5, "B")))
    assert r.tp == 0 and r.fp == 2 and r.fn == 1


def test_summary_line():
    g = keys((0, 5, "A"))
    assert "F1 1.000" in evaluate_spans(g, g).to_text()
    assert evaluate_spans(g, g).summary() == "P 1.000 R 1.000 F1 1.000"


def test_document_level():
    text = "uno dos tres"
    gold = [Document("a", text, (SpanAnnotation(0, 3, "X"),)), Document("b", text)]
    pred = [Document("b", text), Document("a", text, (SpanAnnotation(0, 3, "X"), SpanAnnotation(4, 7, "X")))]
    r = evaluate(gold, pred)
    assert (r.tp, r.fp, r.fn) == (1, 1, 0)
    with pytest.raises(ConfigError):
        evaluate(gold, pred[:1])


span = st.tuples(st.sampled_from("de"), st.integers(0, 5), st.integers(6, 9), st.sampled_from("AB"))


@given(st.lists(span, max_size=12, unique=True), st.lists(span, max_size=12, unique=True))
@settings(max_examples=300, deadline=None)
def test_count_identities(gold, pred):
    r = evaluate_spans(gold, pred)
    assert r.tp + r.fn == len(gold)
    assert r.tp + r.fp == len(pred)
    s = evaluate_spans(pred, gold)
    assert s.precision == r.recall and s.recall == r.precision and s.f1 == pytest.approx(r.f1)
    assert evaluate_spans(list(reversed(gold)), list(reversed(pred))) == r


def test_compare_deltas():
    g = keys((0, 5, "A"), (10, 15, "B"))
    base = evaluate_spans(g, keys((0, 5, "A")))
    best = evaluate_spans(g, g)
    table = compare([("baseline", {"t1": base}), ("s5", {"t1": best})])
    (_, _, d0), (_, _, d1) = table.rows
    assert d0["t1"] == 0.0
    assert d1["t1"] == pytest.approx(100 * (1.0 - 2 / 3))
    assert "s5" in table.to_text()
    tsv = table.to_tsv().splitlines()
    assert tsv[0] == "system\tt1_precision\tt1_recall\tt1_f1\tt1_f1_delta"
    assert tsv[2].endswith("+33.33")
    with pytest.raises(ConfigError):
        compare([("a", base)], baseline="zzz")


def test_report_tsv():
    r = evaluate_spans(keys((0, 5, "A")), keys((0, 5, "A")))
    lines = r.to_tsv().splitlines()
    assert lines[0].split("\t")[0] == "label" and lines[-1].startswith("micro\t1\t0\t0")
