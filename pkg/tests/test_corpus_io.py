import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spanboost.corpus_io import (
    Document,
    SpanAnnotation,
    Token,
    align_annotations,
    load_subword_vocab,
    make_windows,
    parse_standoff,
    read_conll,
    read_corpus,
    read_document,
    segment_sentences,
    tokenize,
    write_conll,
    write_corpus,
    write_standoff,
)
from spanboost.errors import ConfigError, IntegrityError, OverlapError, ParseError, RangeError
from spanboost.tagcodec import BIOSE, TagSequence

TEXT = "Paciente cocinero de profesión."


# -- standoff -----------------------------------------------------------------


def test_parse_single_annotation():
    text = "Soy  cocinero hoy"
    doc = parse_standoff("T1\tPROFESION 5 13\tcocinero\n", text)
    assert doc.annotations == (SpanAnnotation(5, 13, "PROFESION"),)


def test_parse_empty_ann():
    assert parse_standoff("", TEXT).annotations == ()


def test_surface_mismatch_is_integrity_error():
    with pytest.raises(IntegrityError):
        parse_standoff("T1\tPROF 5 13\txxxxxxxx\n", "Soy  cocinero hoy")


def test_offsets_out_of_range():
    with pytest.raises(RangeError):
        parse_standoff("T1\tPROF 5 99\tx\n", "short")


def test_malformed_line_reports_line_number():
    with pytest.raises(ParseError) as e:
        parse_standoff("T1\tPROF 0 3\tSoy\nT2 PROF 0 3\n", "Soy yo")
    assert e.value.line == 2


def test_discontinuous_span_rejected():
    with pytest.raises(ParseError):
        parse_standoff("T1\tPROF 0 3;4 6\tSoy yo\n", "Soy yo")


def test_non_entity_lines_skipped():
    ann = "T1\tPROF 0 3\tSoy\nR1\tRel Arg1:T1 Arg2:T1\n#1\tAnnotatorNotes T1\tnote\nA1\tNeg T1\n"
    assert len(parse_standoff(ann, "Soy yo").annotations) == 1


def test_surface_spanning_newline():
    text = "médico de\nfamilia"
    doc = parse_standoff("T1\tPROF 0 17\tmédico de familia\n", text)
    assert doc.surface(doc.annotations[0]) == "médico de\nfamilia"


def test_write_empty():
    ann, text = write_standoff(Document("d", TEXT))
    assert ann == "" and text == TEXT


def test_write_numbers_in_offset_order():
    doc = Document("d", TEXT, (SpanAnnotation(9, 17, "PROFESION"), SpanAnnotation(0, 8, "PACIENTE")))
    ann, _ = write_standoff(doc)
    lines = ann.splitlines()
    assert lines == ["T1\tPACIENTE 0 8\tPaciente", "T2\tPROFESION 9 17\tcocinero"]


def test_document_rejects_partial_overlap_and_duplicates():
    with pytest.raises(OverlapError):
        Document("d", TEXT, (SpanAnnotation(0, 8, "A"), SpanAnnotation(5, 12, "B")))
    with pytest.raises(OverlapError):
        Document("d", TEXT, (SpanAnnotation(0, 8, "A"), SpanAnnotation(0, 8, "A")))
    # nesting is representable, only encoding rejects it
    Document("d", TEXT, (SpanAnnotation(0, 17, "A"), SpanAnnotation(9, 17, "B")))


def test_span_annotation_checks():
    with pytest.raises(RangeError):
        SpanAnnotation(3, 3, "X")
    with pytest.raises(ConfigError):
        SpanAnnotation(0, 3, "")


_label = st.sampled_from(["PROFESION", "SITUACION_LABORAL", "X"])


@st.composite
def documents(draw):
    text = draw(st.text(alphabet="abc de\nfñ.", min_size=1, max_size=40))
    cuts = sorted(set(draw(st.lists(st.integers(0, len(text)), max_size=8))))
    anns = []
    for a, b in zip(cuts[::2], cuts[1::2]):
        if a < b:
            anns.append(SpanAnnotation(a, b, draw(_label)))
    return Document("doc", text, tuple(anns))


@given(documents())
@settings(max_examples=200, deadline=None)
def test_standoff_roundtrip(doc):
    ann, text = write_standoff(doc)
    again = parse_standoff(ann, text, doc.id)
    assert again == doc
    assert write_standoff(again) == (ann, text)


def test_corpus_roundtrip(tmp_path):
    docs = [
        Document("a", "Uno dos.\n", (SpanAnnotation(0, 3, "X"),)),
        Document("b", "Tres\n", ()),
    ]
    write_corpus(docs, tmp_path)
    assert read_corpus(tmp_path) == docs
    assert read_document(tmp_path / "b.txt").annotations == ()


def test_corpus_with_separate_annotation_dir(tmp_path):
    write_corpus([Document("a", "Uno dos.\n", (SpanAnnotation(0, 3, "X"),))], tmp_path / "main")
    (tmp_path / "other").mkdir()
    (tmp_path / "other" / "a.ann").write_text("T1\tY 4 7\tdos\n", encoding="utf-8")
    doc = read_corpus(tmp_path / "main", tmp_path / "other")[0]
    assert doc.annotations == (SpanAnnotation(4, 7, "Y"),)


def test_missing_corpus_dir(tmp_path):
    with pytest.raises(FileNotFoundError):
        read_corpus(tmp_path / "nope")


# -- tokenization ---------------------------------------------------------------


def test_tokenize_example():
    toks = tokenize("El cocinero.")
    assert [(t.surface, t.start, t.end) for t in toks] == [("El", 0, 2), ("cocinero", 3, 11), (".", 11, 12)]


def test_tokenize_digits_and_letters_split():
    assert [t.surface for t in tokenize("a3b 2021-05")] == ["a", "3", "b", "2021", "-", "05"]


def test_tokenize_empty_rejected():
    with pytest.raises(ConfigError):
        tokenize("")


def test_subword_greedy_longest_match():
    vocab = {"coci", "nero"} | set("cocinero")
    toks = tokenize("cocinero", vocab)
    assert [(t.surface, t.start, t.end) for t in toks] == [("coci", 0, 4), ("nero", 4, 8)]


def test_subword_vocab_file(tmp_path):
    p = tmp_path / "v.txt"
    p.write_text("coci\nnero\n\n", encoding="utf-8")
    assert load_subword_vocab(p) == frozenset({"coci", "nero"})


@given(st.text(alphabet=st.characters(codec="utf-8", categories=("L", "N", "P", "Zs", "Cc")), min_size=1, max_size=60))
@settings(max_examples=300, deadline=None)
def test_token_offsets_match_text(text):
    if not text.strip():
        return
    for t in tokenize(text):
        assert text[t.start:t.end] == t.surface


@given(st.text(alphabet="abcdeñ", min_size=1, max_size=12), st.sets(st.text(alphabet="abcdeñ", min_size=2, max_size=4)))
@settings(max_examples=300, deadline=None)
def test_subwords_preserve_concatenation(word, vocab):
    pieces = tokenize(word, vocab)
    assert "".join(p.surface for p in pieces) == word
    assert pieces[0].start == 0 and pieces[-1].end == len(word)


# -- sentences and windows --------------------------------------------------------


def test_sentences_basic():
    text = "A. B."
    toks = segment_sentences(tokenize(text), text)
    assert [t.sentence_index for t in toks] == [0, 0, 1, 1]


def test_sentences_no_terminator():
    text = "uno dos tres"
    assert {t.sentence_index for t in segment_sentences(tokenize(text), text)} == {0}


def test_sentences_lowercase_after_period_does_not_split():
    text = "Dr. vino. Luego"
    idx = [t.sentence_index for t in segment_sentences(tokenize(text), text)]
    assert idx == [0, 0, 0, 0, 1]


def test_sentences_blank_line():
    text = "uno dos\n\ntres"
    assert [t.sentence_index for t in segment_sentences(tokenize(text), text)] == [0, 0, 1]


def _toks(n, sentence=0):
    return [Token(f"w{i}", 2 * i, 2 * i + 1, sentence) for i in range(n)]


def test_windows_short_sentence():
    toks = _toks(10)
    (w,) = make_windows(toks)
    assert len(w.core_tokens) == 10 and w.left_context_len == 0 and w.right_context_len == 0


def test_windows_long_sentence():
    toks = _toks(350)
    w1, w2 = make_windows(toks)
    assert len(w1.core_tokens) == 300 and len(w2.core_tokens) == 50
    assert w2.left_context_len == 100
    assert w2.tokens[:100] == tuple(toks[200:300])
    assert w1.left_context_len == 0 and w1.right_context_len == 50


def test_windows_context_crosses_sentences():
    toks = [Token(f"w{i}", i, i + 1, i // 4) for i in range(12)]
    ws = make_windows(toks, max_core=300, max_context=2)
    assert len(ws) == 3
    assert ws[1].left_context_len == 2 and ws[1].right_context_len == 2
    assert [t.surface for t in ws[1].core_tokens] == ["w4", "w5", "w6", "w7"]


@given(st.lists(st.integers(0, 3), min_size=1, max_size=80), st.integers(1, 9), st.integers(0, 5))
@settings(max_examples=300, deadline=None)
def test_window_cores_partition_tokens(sentence_breaks, max_core, max_context):
    s = 0
    toks = []
    for i, b in enumerate(sentence_breaks):
        s += b == 0
        toks.append(Token(f"w{i}", i, i + 1, s))
    ws = make_windows(toks, max_core, max_context)
    flat = [t for w in ws for t in w.core_tokens]
    assert flat == toks
    for w in ws:
        assert len(w.core_tokens) <= max_core
        assert w.left_context_len <= max_context and w.right_context_len <= max_context
        assert len({t.sentence_index for t in w.core_tokens}) == 1


def test_align_expands_to_token_boundaries():
    text = "el cocinero"
    toks = tokenize(text)
    anns, n = align_annotations(toks, [SpanAnnotation(4, 8, "P")])
    assert anns == [SpanAnnotation(3, 11, "P")] and n == 1
    anns, n = align_annotations(toks, [SpanAnnotation(3, 11, "P")])
    assert n == 0


# -- CoNLL ------------------------------------------------------------------------


def test_conll_roundtrip():
    blocks = [
        (("El", "cocinero"), TagSequence(("O", "S-P"), BIOSE)),
        (("Su", "madre", "."), TagSequence(("O", "O", "O"), BIOSE)),
    ]
    text = write_conll(blocks)
    assert read_conll(text, BIOSE) == blocks
    assert write_conll(read_conll(text, BIOSE)) == text


def test_conll_blank_lines_separate_blocks():
    assert len(read_conll("a O\nb O\n\n\nc B-X\n")) == 2


def test_conll_three_columns_rejected():
    with pytest.raises(ParseError):
        read_conll("a O extra\n")
