"""Warm-starting a main-task CRF from a model trained on an auxiliary task."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from . import tagcodec
from .crf import CrfModel, FeatureExtractor, TrainConfig
from .errors import ConfigError, FormatError, TrainingError
from .pipeline import Preprocessor, train_on_documents


def identity_label_map(model: CrfModel) -> dict:
    """Map every entity label of ``model`` (and ``O``) to itself."""
    labels = {tagcodec.split_tag(t)[1] for t in model.labels} - {""}
    out = {lab: lab for lab in sorted(labels)}
    out["O"] = "O"
    return out


def _entity_labels(tags) -> set:
    return {tagcodec.split_tag(t)[1] for t in tags} - {""}


def _pairs(label_map) -> list[tuple[str, str]]:
    if label_map is None:
        return []
    items = label_map.items() if isinstance(label_map, Mapping) else label_map
    out = []
    for src, dst in items:
        targets = [dst] if isinstance(dst, str) else list(dst)
        out.extend((src, t) for t in targets)
    return out


def transfer_init(aux_model: CrfModel, main_labels, label_map=None) -> CrfModel:
    """Build an untrained main-task model that reuses ``aux_model``'s knowledge.

    ``main_labels`` are the entity labels of the main task. ``label_map``
    links aux entity labels to main entity labels (``"O"`` links the outside
    tag); it is a mapping, a mapping to lists, or a sequence of pairs, so
    one aux label may seed several finer main labels. The feature alphabet
    is kept. Emission columns and transition entries are copied between
    linked tags with the same prefix; begin/end states always link to
    themselves. Everything else starts at zero. When several aux tags link
    to one main tag, the first in the aux alphabet wins.
    """
    pairs = _pairs(label_map)
    main_entities = set(main_labels) - {"O"}
    if not main_entities:
        raise ConfigError("main label set is empty")
    aux_entities = _entity_labels(aux_model.labels)
    for src, dst in pairs:
        if src != "O" and src not in aux_entities:
            raise ConfigError(f"label map source {src!r} is not an auxiliary label")
        if dst != "O" and dst not in main_entities:
            raise ConfigError(f"label map target {dst!r} is not a main-task label")
        if (src == "O") != (dst == "O"):
            raise ConfigError(f"'O' can only map to 'O' (got {src!r} -> {dst!r})")
    links: dict = {}
    for src, dst in pairs:
        links.setdefault(src, [])
        if dst not in links[src]:
            links[src].append(dst)

    main_tags = tuple(tagcodec.tag_set(main_entities, aux_model.scheme))
    main_index = {t: i for i, t in enumerate(main_tags)}
    La, Lm = aux_model.n_labels, len(main_tags)

    # aux state -> main states, including begin/end
    mapping = {La: [Lm], La + 1: [Lm + 1]}
    for a, tag in enumerate(aux_model.labels):
        prefix, lab = tagcodec.split_tag(tag)
        key = "O" if tag == "O" else lab
        targets = [t if t == "O" else f"{prefix}-{t}" for t in links.get(key, [])]
        mapping[a] = [main_index[t] for t in targets if t in main_index]

    W = np.zeros((aux_model.W.shape[0], Lm))
    filled = set()
    for a in range(La):
        for m in mapping[a]:
            if m not in filled:
                W[:, m] = aux_model.W[:, a]
                filled.add(m)
    T = np.zeros((Lm + 2, Lm + 2))
    filled = set()
    for a in range(La + 2):
        for b in range(La + 2):
            for ma in mapping[a]:
                for mb in mapping[b]:
                    if (ma, mb) not in filled:
                        T[ma, mb] = aux_model.T[a, b]
                        filled.add((ma, mb))
    return CrfModel(
        main_tags, dict(aux_model.features), W, T, aux_model.scheme,
        aux_model.extractor, aux_model.constrained,
    )


@dataclass
class TransferResult:
    aux_model: CrfModel
    model: CrfModel

    @property
    def log_lines(self) -> list[str]:
        return [f"aux {r}" for r in self.aux_model.history] + [f"main {r}" for r in self.model.history]


def train_transfer(
    aux_train,
    main_train,
    config: TrainConfig = TrainConfig(),
    aux_dev=None,
    main_dev=None,
    label_map=None,
    pre: Preprocessor = Preprocessor(),
    extractor: Optional[FeatureExtractor] = None,
    aux_config: Optional[TrainConfig] = None,
    aux_model: Optional[CrfModel] = None,
) -> TransferResult:
    """Train on the auxiliary layer, transfer, then fine-tune on the main layer.

    ``aux_train`` and ``main_train`` hold the same documents with different
    annotation layers. A pre-trained ``aux_model`` skips the first phase.
    """
    aux_ids = [d.id for d in aux_train]
    main_ids = [d.id for d in main_train]
    if sorted(aux_ids) != sorted(main_ids):
        raise ConfigError("auxiliary and main layers must cover the same documents")
    if not any(d.annotations for d in main_train):
        raise TrainingError("main task has no annotations")
    if aux_model is None:
        if not any(d.annotations for d in aux_train):
            raise TrainingError("auxiliary task has no annotations")
        aux_model = train_on_documents(aux_train, aux_dev, aux_config or config, pre, extractor)
    main_labels = {a.label for d in main_train for a in d.annotations}
    init = transfer_init(aux_model, main_labels, label_map)
    model = train_on_documents(main_train, main_dev, config, pre, init=init)
    return TransferResult(aux_model, model)


def load_label_map(path) -> list[tuple[str, str]]:
    """Read ``aux_label<TAB>main_label`` lines; an aux label may repeat."""
    out = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip() or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{path}:{lineno}: expected 'aux_label<TAB>main_label'")
        out.append((parts[0], parts[1]))
    return out


def save_label_map(label_map, path) -> None:
    Path(path).write_text("".join(f"{k}\t{v}\n" for k, v in _pairs(label_map)), encoding="utf-8")
