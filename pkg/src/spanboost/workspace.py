"""End-to-end submission recipes over a workspace directory.

Layout (inputs)::

    workspace.cfg          optional key=value settings (see DEFAULTS)
    corpus/base/*.txt      raw text for the base embedding
    corpus/general/*.txt   general-language adaptation text
    corpus/domain/*.txt    in-domain adaptation text
    train/*.txt, *.ann     main-task training documents
    train_aux/*.ann        auxiliary-task layer over the same documents
    test/*.txt             documents to annotate
    label_map.tsv          optional aux -> main label links for transfer

Every artifact produced is recorded in ``manifest.tsv`` with its SHA-256,
so an interrupted recipe resumes without retraining finished members.
"""

from __future__ import annotations

import hashlib
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional

from . import crf, embeddings, splits
from .corpus_io import read_corpus, read_raw_texts, tokenize, write_corpus
from .crf import EmbeddingBins, FeatureExtractor, TrainConfig
from .ensemble import VARIANTS, compose_submission, cv_member_id, recipe_members
from .errors import ConfigError
from .pipeline import Preprocessor, train_on_documents, with_dev_stopping
from .tagcodec import check_scheme
from .transfer import load_label_map, transfer_init

log = logging.getLogger(__name__)

ENV_WORKSPACE = "SPANBOOST_WORKSPACE"
MANIFEST = "manifest.tsv"

DEFAULTS = {
    "seed": "0",
    "epochs": "20",
    "batch_size": "16",
    "learning_rate": "0.1",
    "patience": "3",
    "weight_decay": "0.0",
    "k": "5",
    "pca_dims": "5",
    "split_variant": "base",
    "window": "5",
    "dim": "100",
    "shift": "0.0",
    "lambda": "0.5",
    "scheme": "BIOSE",
    "max_core": "300",
    "max_context": "100",
    "tie_break": "priority",
    "subword_vocab": "",
}

TRAIN_KEYS = ("seed", "epochs", "batch_size", "learning_rate", "patience", "weight_decay")


def read_kv(path) -> dict:
    """Parse a flat ``key=value`` file (``#`` starts a comment line)."""
    out = {}
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        if not sep:
            raise ConfigError(f"{path}:{lineno}: expected key=value")
        out[key.strip()] = val.strip()
    return out


def sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def corpus_tokens(directory) -> list[list[str]]:
    """Lowercased word tokens of every text in ``directory``, one list per file."""
    return [[t.surface.lower() for t in tokenize(text)] for text in read_raw_texts(directory) if text.strip()]


class Manifest:
    """``key<TAB>relative path<TAB>sha256<TAB>dev_f1`` lines, sorted by key."""

    def __init__(self, root: Path):
        self.root = root
        self.path = root / MANIFEST
        self.entries: dict = {}
        if self.path.exists():
            for line in self.path.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    key, rel, digest, score = line.split("\t")
                    self.entries[key] = (rel, digest, None if score == "-" else float(score))

    def done(self, key: str) -> bool:
        if key not in self.entries:
            return False
        rel, digest, _ = self.entries[key]
        p = self.root / rel
        return p.exists() and sha256(p) == digest

    def record(self, key: str, path: Path, score: Optional[float] = None):
        rel = path.relative_to(self.root).as_posix()
        self.entries[key] = (rel, sha256(path), score)
        self.save()

    def score(self, key: str) -> Optional[float]:
        return self.entries.get(key, (None, None, None))[2]

    def file(self, key: str) -> Path:
        return self.root / self.entries[key][0]

    def save(self):
        lines = []
        for key in sorted(self.entries):
            rel, digest, score = self.entries[key]
            lines.append(f"{key}\t{rel}\t{digest}\t{'-' if score is None else repr(score)}")
        tmp = self.path.with_suffix(".tmp")
        tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
        os.replace(tmp, self.path)

    def members(self) -> list[str]:
        return sorted(k for k in self.entries if k.split("/")[0] in ("full", "cv", "transfer"))


@dataclass
class _Job:
    key: str
    out: str
    train_dir: str
    dev_ids: Optional[tuple]
    train_ids: Optional[tuple]
    config: TrainConfig
    pre: Preprocessor
    embedding_path: str
    aux_dir: Optional[str] = None
    label_map: object = None


def _run_job(job: _Job):
    emb = embeddings.load_embeddings(job.embedding_path)
    extractor = FeatureExtractor(EmbeddingBins.from_embedding(emb))
    docs = read_corpus(job.train_dir)
    if job.aux_dir is not None:
        aux_docs = read_corpus(job.train_dir, job.aux_dir)
        aux = train_on_documents(aux_docs, None, job.config, job.pre, extractor)
        labels = {a.label for d in docs for a in d.annotations}
        init = transfer_init(aux, labels, job.label_map)
        model = train_on_documents(docs, None, job.config, job.pre, init=init)
    else:
        train = [d for d in docs if job.train_ids is None or d.id in job.train_ids]
        dev = [d for d in docs if job.dev_ids is not None and d.id in job.dev_ids] or None
        model = train_on_documents(train, dev, job.config, job.pre, extractor)
    crf.save_model(model, job.out)
    scores = [r.dev_f1 for r in model.history if r.dev_f1 is not None]
    return job.key, (max(scores) if scores else None)


class Workspace:
    def __init__(self, root=None, overrides: Optional[dict] = None):
        root = root or os.environ.get(ENV_WORKSPACE)
        if not root:
            raise ConfigError(f"no workspace given and ${ENV_WORKSPACE} is unset")
        self.root = Path(root).resolve()
        if not self.root.is_dir():
            raise FileNotFoundError(f"workspace not found: {self.root}")
        settings = dict(DEFAULTS)
        cfg = self.root / "workspace.cfg"
        if cfg.exists():
            extra = read_kv(cfg)
            unknown = sorted(set(extra) - set(DEFAULTS))
            if unknown:
                raise ConfigError(f"unknown workspace settings: {unknown}")
            settings.update(extra)
        settings.update({k: str(v) for k, v in (overrides or {}).items()})
        self.settings = settings
        self.manifest = Manifest(self.root)
        try:
            self._configure()
        except ValueError as e:
            if isinstance(e, ConfigError):
                raise
            raise ConfigError(f"bad workspace setting: {e}") from None
        self._check_settings()

    def _configure(self):
        settings = self.settings
        vocab = None
        if settings["subword_vocab"]:
            from .corpus_io import load_subword_vocab

            vocab = load_subword_vocab(self.root / settings["subword_vocab"])
        self.pre = Preprocessor(
            vocab, int(settings["max_core"]), int(settings["max_context"]), check_scheme(settings["scheme"])
        )
        self.train_config = TrainConfig.from_mapping({k: settings[k] for k in TRAIN_KEYS})
        self.k = int(settings["k"])
        for key in ("pca_dims", "window", "dim"):
            int(settings[key])
        for key in ("shift", "lambda"):
            float(settings[key])
        from .ensemble import _tie_break

        _tie_break(settings["tie_break"])
        if settings["split_variant"] not in VARIANTS:
            raise ConfigError(f"split_variant must be one of {VARIANTS}")

    def _check_settings(self):
        """Artifacts from different settings must not mix; the effective settings are pinned."""
        path = self.root / "settings.cfg"
        text = "".join(f"{k}={self.settings[k]}\n" for k in sorted(self.settings))
        if self.manifest.done("settings"):
            if path.read_text(encoding="utf-8") != text:
                raise ConfigError(
                    f"settings differ from those recorded in {self.root / MANIFEST}; "
                    "use a fresh workspace or delete the manifest to rebuild"
                )
            return
        path.write_text(text, encoding="utf-8")
        self.manifest.record("settings", path)

    # -- embeddings ---------------------------------------------------------

    def embedding_path(self, variant: str) -> Path:
        return self.root / "embeddings" / f"{variant}.emb"

    def ensure_embeddings(self):
        s = self.settings
        window, dim, shift, lam = int(s["window"]), int(s["dim"]), float(s["shift"]), float(s["lambda"])
        sources = {"base": None, "general-adapted": "general", "domain-adapted": "domain"}
        base_tokens = None
        for variant, target in sources.items():
            key = f"embeddings/{variant}"
            if self.manifest.done(key):
                continue
            if base_tokens is None:
                base_tokens = corpus_tokens(self.root / "corpus" / "base")
            if target is None:
                model = embeddings.train_embeddings(base_tokens, window, dim, shift, variant=variant)
            else:
                model = embeddings.train_embeddings(
                    corpus_tokens(self.root / "corpus" / target), window, dim, shift,
                    base_corpus=base_tokens, lam=lam, variant=variant,
                )
            out = self.embedding_path(variant)
            out.parent.mkdir(parents=True, exist_ok=True)
            embeddings.save_embeddings(model, out)
            self.manifest.record(key, out)

    # -- splits -------------------------------------------------------------

    def ensure_plan(self) -> splits.SplitPlan:
        key = "plans/strategic"
        out = self.root / "plans" / "strategic.plan"
        if not self.manifest.done(key):
            variant = self.settings["split_variant"]
            emb = embeddings.load_embeddings(self.embedding_path(variant))
            cfg = splits.SplitConfig(self.k, int(self.settings["pca_dims"]), self.train_config.seed)
            plan = splits.make_plan(read_corpus(self.root / "train"), emb, cfg, self.pre.subword_vocab)
            out.parent.mkdir(parents=True, exist_ok=True)
            splits.save_plan(plan, out)
            (self.root / "plans" / "strategic_2d.tsv").write_text(
                splits.format_plan_2d(splits.export_plan_2d(plan)), encoding="utf-8"
            )
            self.manifest.record(key, out)
        return splits.load_plan(out)

    # -- members ------------------------------------------------------------

    def _jobs_for(self, members: list[str]) -> list[_Job]:
        need_plan = any(m.startswith("cv/") for m in members)
        plan = self.ensure_plan() if need_plan else None
        label_map_path = self.root / "label_map.tsv"
        label_map = load_label_map(label_map_path) if label_map_path.exists() else None
        jobs = []
        train_dir = str(self.root / "train")
        for m in members:
            if self.manifest.done(m):
                continue
            parts = m.split("/")
            kind, variant = parts[0], parts[1]
            out = self.root / "models" / (m.replace("/", "_") + ".crf")
            emb = str(self.embedding_path(variant))
            if kind == "full":
                jobs.append(_Job(m, str(out), train_dir, None, None, self.train_config, self.pre, emb))
            elif kind == "cv":
                c = int(parts[2])
                dev_ids = tuple(plan.members(c))
                train_ids = tuple(d for d in plan.assignment if plan.assignment[d] != c)
                cfg = with_dev_stopping(self.train_config)
                jobs.append(_Job(m, str(out), train_dir, dev_ids, train_ids, cfg, self.pre, emb))
            elif kind == "transfer":
                aux_dir = self.root / "train_aux"
                if not aux_dir.is_dir():
                    raise FileNotFoundError(f"transfer members need the auxiliary layer in {aux_dir}")
                jobs.append(
                    _Job(m, str(out), train_dir, None, None, self.train_config, self.pre, emb, str(aux_dir), label_map)
                )
            else:
                raise ConfigError(f"unknown member kind in {m!r}")
        return jobs

    def ensure_members(self, members: list[str], jobs: int = 1):
        self.ensure_embeddings()
        todo = self._jobs_for(members)
        if not todo:
            return
        (self.root / "models").mkdir(exist_ok=True)
        if jobs > 1 and len(todo) > 1:
            with ProcessPoolExecutor(max_workers=jobs) as ex:
                results = list(ex.map(_run_job, todo))
        else:
            results = [_run_job(j) for j in todo]
        by_key = {j.key: j for j in todo}
        for key, score in results:
            self.manifest.record(key, Path(by_key[key].out), score)

    # -- recipes ------------------------------------------------------------

    def run_recipe(self, name: str, jobs: int = 1):
        members = recipe_members(name, VARIANTS, self.k)
        self.ensure_members(members, jobs)
        models = {m: crf.load_model(self.manifest.file(m)) for m in members}
        scores = {m: self.manifest.score(m) for m in members if self.manifest.score(m) is not None}
        test = read_corpus(self.root / "test")
        sub = compose_submission(
            name, models, test, self.pre, VARIANTS, self.k, scores, self.settings["tie_break"]
        )
        out = self.root / "predictions" / name.lower()
        write_corpus(sub.predictions, out)
        lines = [f"recipe\t{name.lower()}", f"voted\t{str(sub.voted).lower()}", f"members\t{len(sub.members)}"]
        lines += [f"member\t{m}" for m in sub.members]
        if sub.stats is not None:
            lines.append(f"repaired_positions\t{sub.stats.repaired}\t{sub.stats.positions}")
        summary = out / "RECIPE.tsv"
        summary.write_text("\n".join(lines) + "\n", encoding="utf-8")
        self.manifest.record(f"predictions/{name.lower()}", summary)
        return sub


def init_synthetic_workspace(root, n_train: int = 60, n_test: int = 20, seed: int = 0, settings: Optional[dict] = None):
    """Populate ``root`` with a small synthetic workspace (used by demos and tests)."""
    from .synthetic import coarsen, generate_corpus, raw_corpus

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for kind, n in (("base", 80), ("general", 60), ("domain", 60)):
        d = root / "corpus" / kind
        d.mkdir(parents=True, exist_ok=True)
        for i, text in enumerate(raw_corpus(kind, n, seed + {"base": 0, "general": 1, "domain": 2}[kind])):
            (d / f"{kind}{i:04d}.txt").write_text(text, encoding="utf-8")
    docs = generate_corpus(n_train + n_test, seed)
    write_corpus([p.task1 for p in docs[:n_train]], root / "train")
    aux = root / "train_aux"
    aux.mkdir(exist_ok=True)
    from .corpus_io import write_standoff

    for p in docs[:n_train]:
        ann, _ = write_standoff(coarsen(p.task1))
        (aux / f"{p.id}.ann").write_text(ann, encoding="utf-8")
    write_corpus([p.task1 for p in docs[n_train:]], root / "test_gold")
    test = root / "test"
    test.mkdir(exist_ok=True)
    for p in docs[n_train:]:
        (test / f"{p.id}.txt").write_text(p.text, encoding="utf-8")
    (root / "label_map.tsv").write_text(
        "O\tO\nOCUPACION\tPROFESION\nOCUPACION\tSITUACION_LABORAL\n", encoding="utf-8"
    )
    if settings:
        (root / "workspace.cfg").write_text("".join(f"{k}={v}\n" for k, v in settings.items()), encoding="utf-8")
    return root
