"""Hard majority voting over tag sequences, cross-validation ensembles and recipes.

Votes count tag strings per token position; model scores are ignored.
BIOSE predictions are mapped to BIO first because the coarser scheme
produces fewer disagreements, and the voted sequence is repaired so every
entity starts with ``B-``.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence

from . import tagcodec
from .crf import CrfModel, FeatureExtractor, TrainConfig
from .errors import ConfigError, TrainingError
from .pipeline import Preprocessor, predict_tags, train_on_documents, with_dev_stopping
from .splits import SplitPlan
from .tagcodec import BIO, BIOSE, TagSequence

log = logging.getLogger(__name__)

PRIORITY = "priority"
PREFER_O = "prefer-o"

VARIANTS = ("base", "general-adapted", "domain-adapted")
SINGLE_VARIANT = "domain-adapted"
TRANSFER_SUBMITTED_VARIANT = "general-adapted"
RECIPES = ("s1", "s2", "s3_clean", "s3_submitted", "s4", "s5")


def _tie_break(value: str) -> str:
    v = value.lower()
    if v not in (PRIORITY, PREFER_O):
        raise ConfigError(f"unknown tie-break {value!r}; expected 'priority' or 'prefer-o'")
    return v


@dataclass(frozen=True)
class EnsembleConfig:
    members: tuple
    tie_break: str = PRIORITY

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        object.__setattr__(self, "tie_break", _tie_break(self.tie_break))
        if not self.members:
            raise ConfigError("an ensemble needs at least one member")
        if len(set(self.members)) != len(self.members):
            raise ConfigError("ensemble member ids must be unique")


def _tag_key(tag: str):
    prefix, label = tagcodec.split_tag(tag)
    return (label, prefix, tag)


def majority(predictions: Sequence[TagSequence], config: Optional[EnsembleConfig] = None) -> TagSequence:
    """Per-position most frequent BIO tag, before repair.

    Ties go to the tag of the earliest member (in ``predictions`` order)
    among the tied tags. With ``prefer-o`` an ``O`` in the tie wins, and
    other ties go to the smallest tag by (label, prefix), so the result does
    not depend on member order.
    """
    if not predictions:
        raise ConfigError("cannot vote over zero predictions")
    if config is None:
        config = EnsembleConfig(tuple(range(len(predictions))))
    if len(config.members) != len(predictions):
        raise ConfigError(f"{len(predictions)} predictions for {len(config.members)} members")
    seqs = [tagcodec.biose_to_bio(p).tags if p.scheme == BIOSE else p.tags for p in predictions]
    n = len(seqs[0])
    if any(len(s) != n for s in seqs):
        raise ConfigError("member predictions differ in length")
    out = []
    for i in range(n):
        column = [s[i] for s in seqs]
        counts = Counter(column)
        top = max(counts.values())
        tied = {t for t, c in counts.items() if c == top}
        if len(tied) == 1:
            out.append(next(iter(tied)))
        elif config.tie_break == PREFER_O:
            out.append("O" if "O" in tied else min(tied, key=_tag_key))
        else:
            out.append(next(t for t in column if t in tied))
    return TagSequence(tuple(out), BIO)


def vote(predictions: Sequence[TagSequence], config: Optional[EnsembleConfig] = None) -> TagSequence:
    """Majority vote followed by repair; the result is always a valid BIO sequence."""
    return tagcodec.repair(majority(predictions, config))[0]


@dataclass
class VoteStats:
    positions: int = 0
    repaired: int = 0

    @property
    def repaired_fraction(self) -> float:
        return self.repaired / self.positions if self.positions else 0.0


def order_members(member_ids: Sequence[str], dev_scores: Optional[Mapping[str, float]] = None) -> list[str]:
    """Descending dev F1; members without a score keep their configured order after the rest."""
    if not dev_scores:
        return list(member_ids)
    pos = {m: i for i, m in enumerate(member_ids)}
    return sorted(member_ids, key=lambda m: (m not in dev_scores, -dev_scores.get(m, 0.0), pos[m]))


def ensemble_documents(
    models: Mapping[str, CrfModel],
    docs,
    pre: Preprocessor,
    tie_break: str = PRIORITY,
    order: Optional[Sequence[str]] = None,
):
    """Tag ``docs`` with every model and vote; returns ``(documents, stats)``.

    ``order`` lists member ids by priority (defaults to mapping order).
    """
    order = list(order) if order is not None else list(models)
    config = EnsembleConfig(tuple(order), tie_break)
    per_member = [predict_tags(models[m], docs, pre) for m in order]
    stats = VoteStats()
    out = []
    for j, doc in enumerate(docs):
        prepared = per_member[0][j][0]
        raw = majority([pm[j][1] for pm in per_member], config)
        fixed, n = tagcodec.repair(raw)
        stats.positions += len(raw)
        stats.repaired += n
        out.append(doc.with_annotations(tagcodec.decode(fixed, prepared.tokens)))
    return out, stats


# ---------------------------------------------------------------------------
# cross-validation ensembles


def _train_job(args):
    key, train_docs, dev_docs, config, pre, extractor = args
    try:
        return key, train_on_documents(train_docs, dev_docs, config, pre, extractor)
    except Exception as e:  # identify the failing member
        raise TrainingError(f"training {key} failed: {e}") from e


def cv_member_id(variant: str, cluster: int) -> str:
    return f"cv/{variant}/{cluster}"


@dataclass
class CvEnsemble:
    models: dict  # member id -> CrfModel
    dev_f1: dict  # member id -> best dev F1
    order: list
    predictions: list = field(default_factory=list)
    stats: Optional[VoteStats] = None


def _best_dev_f1(model: CrfModel) -> float:
    scores = [r.dev_f1 for r in model.history if r.dev_f1 is not None]
    return max(scores) if scores else 0.0


def run_cv_ensemble(
    train_docs,
    plan: SplitPlan,
    variants: Mapping[str, FeatureExtractor],
    config: TrainConfig,
    test_docs=None,
    pre: Preprocessor = Preprocessor(),
    tie_break: str = PRIORITY,
    jobs: int = 1,
) -> CvEnsemble:
    """Train one model per (variant, held-out cluster) and vote on ``test_docs``.

    Each model trains on the other clusters and stops on the held-out
    cluster's entity F1.
    """
    config = with_dev_stopping(config)
    tasks = []
    for name, extractor in variants.items():
        for c in range(plan.k):
            tr, dev = plan.partition(train_docs, c)
            if not tr or not dev:
                raise ConfigError(f"cluster {c} leaves an empty train or dev set")
            tasks.append((cv_member_id(name, c), tr, dev, config, pre, extractor))
    models = dict(_run_jobs(tasks, jobs))
    dev_f1 = {m: _best_dev_f1(models[m]) for m in models}
    order = order_members([t[0] for t in tasks], dev_f1)
    result = CvEnsemble(models, dev_f1, order)
    if test_docs is not None:
        result.predictions, result.stats = ensemble_documents(models, test_docs, pre, tie_break, order)
    return result


def _run_jobs(tasks, jobs: int):
    if jobs <= 1 or len(tasks) <= 1:
        return [_train_job(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_train_job, tasks))


# ---------------------------------------------------------------------------
# submission recipes


def recipe_members(name: str, variants: Sequence[str] = VARIANTS, k: int = 5) -> list[str]:
    """Member ids a recipe combines.

    ``full/<variant>``: trained on all data with loss-based stopping;
    ``cv/<variant>/<c>``: trained with cluster ``c`` held out;
    ``transfer/<variant>``: warm started from the auxiliary task.
    """
    name = name.lower()
    full = [f"full/{v}" for v in variants]
    cv = [cv_member_id(v, c) for v in variants for c in range(k)]
    transfer = [f"transfer/{v}" for v in variants]
    if name == "s1":
        single = SINGLE_VARIANT if SINGLE_VARIANT in variants else variants[-1]
        return [f"full/{single}"]
    if name == "s2":
        return full
    if name == "s3_clean":
        return cv
    if name == "s3_submitted":
        tsx = TRANSFER_SUBMITTED_VARIANT if TRANSFER_SUBMITTED_VARIANT in variants else variants[0]
        return cv + [f"transfer/{tsx}"]
    if name == "s4":
        return transfer
    if name == "s5":
        return full + cv + transfer
    raise ConfigError(f"unknown recipe {name!r}; expected one of {', '.join(RECIPES)}")


@dataclass
class Submission:
    recipe: str
    members: list
    predictions: list
    voted: bool
    stats: Optional[VoteStats] = None


def compose_submission(
    recipe: str,
    artifacts: Mapping[str, CrfModel],
    docs,
    pre: Preprocessor,
    variants: Sequence[str] = VARIANTS,
    k: int = 5,
    dev_scores: Optional[Mapping[str, float]] = None,
    tie_break: str = PRIORITY,
) -> Submission:
    """Predict ``docs`` with the members ``recipe`` names; all but s1 vote."""
    members = recipe_members(recipe, variants, k)
    missing = [m for m in members if m not in artifacts]
    if missing:
        raise ConfigError(f"recipe {recipe} is missing trained members: {missing}")
    if recipe.lower() == "s1":
        from .pipeline import tag_documents

        return Submission(recipe, members, tag_documents(artifacts[members[0]], docs, pre), False)
    order = order_members(members, dev_scores)
    preds, stats = ensemble_documents({m: artifacts[m] for m in members}, docs, pre, tie_break, order)
    return Submission(recipe, order, preds, True, stats)


def load_ensemble_file(path) -> EnsembleConfig:
    """Read an ensemble description: ``members=a.crf,b.crf`` and ``tie_break=...`` lines.

    Members are listed by priority; relative paths resolve against the file's directory.
    """
    from pathlib import Path

    from .workspace import read_kv

    p = Path(path)
    values = read_kv(p)
    unknown = sorted(set(values) - {"members", "tie_break"})
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}")
    if "members" not in values:
        raise ConfigError(f"{path}: 'members' is required")
    members = [m.strip() for m in values["members"].split(",") if m.strip()]
    members = [str(m if Path(m).is_absolute() else p.parent / m) for m in members]
    return EnsembleConfig(tuple(members), values.get("tie_break", PRIORITY))
