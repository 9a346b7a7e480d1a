import numpy as np
import pytest

from spanboost.crf import CrfModel, TrainConfig, predict_window
from spanboost.errors import ConfigError, FormatError, TrainingError
from spanboost.pipeline import Preprocessor, train_on_documents
from spanboost.synthetic import coarsen, generate_corpus
from spanboost.tagcodec import BIOSE, split_tag
from spanboost.transfer import (
    identity_label_map,
    load_label_map,
    save_label_map,
    train_transfer,
    transfer_init,
)

PRE = Preprocessor()


@pytest.fixture(scope="module")
def paired():
    return generate_corpus(40, seed=3)


@pytest.fixture(scope="module")
def aux_model(paired):
    return train_on_documents([p.task1 for p in paired[:30]], None, TrainConfig(epochs=3), PRE)


def test_identity_transfer_is_exact(aux_model):
    labels = {split_tag(t)[1] for t in aux_model.labels} - {""}
    m = transfer_init(aux_model, labels, identity_label_map(aux_model))
    assert m == aux_model


def test_empty_map_gives_zero_weights(aux_model):
    m = transfer_init(aux_model, {"PACIENTE", "FAMILIAR"})
    assert m.features == aux_model.features
    assert not m.W.any() and not m.T.any()
    assert m.labels == ("O",) + tuple(f"{p}-{lab}" for lab in ("FAMILIAR", "PACIENTE") for p in "BIES")


def test_mapped_column_copied(aux_model):
    m = transfer_init(aux_model, {"PACIENTE", "FAMILIAR"}, {"PROFESION": "PACIENTE"})
    for p in "BIES":
        a = aux_model.label_index(f"{p}-PROFESION")
        b = m.label_index(f"{p}-PACIENTE")
        assert np.array_equal(m.W[:, b], aux_model.W[:, a])
        assert not m.W[:, m.label_index(f"{p}-FAMILIAR")].any()
    # transitions between mapped tags and the begin/end states survive
    L_a, L_m = aux_model.n_labels, m.n_labels
    a_b, m_b = aux_model.label_index("B-PROFESION"), m.label_index("B-PACIENTE")
    assert m.T[L_m, m_b] == aux_model.T[L_a, a_b]
    assert np.all(np.isfinite(m.W)) and np.all(np.isfinite(m.T))


def test_one_to_many_map(aux_model):
    coarse = transfer_init(aux_model, {"PROFESION"}, [("PROFESION", "PROFESION")])
    fine = transfer_init(coarse, {"A", "B"}, {"PROFESION": ["A", "B"], "O": "O"})
    for p in "BIES":
        src = coarse.W[:, coarse.label_index(f"{p}-PROFESION")]
        assert np.array_equal(fine.W[:, fine.label_index(f"{p}-A")], src)
        assert np.array_equal(fine.W[:, fine.label_index(f"{p}-B")], src)
    assert np.array_equal(fine.W[:, 0], coarse.W[:, 0])


def test_bijective_map_agrees_before_finetuning(aux_model, paired):
    renamed = {"PROFESION": "JOB", "SITUACION_LABORAL": "STATUS", "O": "O"}
    m = transfer_init(aux_model, {"JOB", "STATUS"}, renamed)
    back = {"JOB": "PROFESION", "STATUS": "SITUACION_LABORAL"}
    for p in paired[30:]:
        for w in PRE.prepare(p.task1, with_tags=False).windows:
            got = [t if t == "O" else t[:2] + back[t[2:]] for t in predict_window(m, w).tags]
            assert tuple(got) == predict_window(aux_model, w).tags


def test_map_validation(aux_model):
    with pytest.raises(ConfigError):
        transfer_init(aux_model, {"A"}, {"NOPE": "A"})
    with pytest.raises(ConfigError):
        transfer_init(aux_model, {"A"}, {"PROFESION": "B"})
    with pytest.raises(ConfigError):
        transfer_init(aux_model, {"A"}, {"O": "A"})
    with pytest.raises(ConfigError):
        transfer_init(aux_model, set())


def test_identical_task_starts_at_aux_loss(paired, aux_model):
    docs = [p.task1 for p in paired[:30]]
    res = train_transfer(docs, docs, TrainConfig(epochs=1), label_map=identity_label_map(aux_model), aux_model=aux_model)
    best_aux = min(r.loss for r in aux_model.history)
    assert res.model.history[0].loss == pytest.approx(best_aux, rel=1e-12)


def test_missing_main_annotations(paired):
    docs = [p.task1 for p in paired[:5]]
    empty = [d.with_annotations(()) for d in docs]
    with pytest.raises(TrainingError):
        train_transfer(docs, empty, TrainConfig(epochs=1))
    with pytest.raises(ConfigError):
        train_transfer(docs, docs[:3], TrainConfig(epochs=1))


def test_transfer_pipeline_runs(paired):
    aux = [coarsen(p.task1) for p in paired[:20]]
    main = [p.task1 for p in paired[:20]]
    res = train_transfer(aux, main, TrainConfig(epochs=2), label_map={"OCUPACION": ["PROFESION", "SITUACION_LABORAL"]})
    assert res.log_lines[0].startswith("aux epoch 0")
    assert any(line.startswith("main epoch 0") for line in res.log_lines)
    assert isinstance(res.model, CrfModel) and res.model.scheme == BIOSE


def test_label_map_file(tmp_path):
    p = tmp_path / "map.tsv"
    save_label_map({"OCUPACION": ["PROFESION", "SITUACION_LABORAL"], "O": "O"}, p)
    assert load_label_map(p) == [("OCUPACION", "PROFESION"), ("OCUPACION", "SITUACION_LABORAL"), ("O", "O")]
    p.write_text("a b c\n", encoding="utf-8")
    with pytest.raises(FormatError):
        load_label_map(p)
