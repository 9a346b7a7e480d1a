"""Entity-level exact-match precision / recall / F1 and system comparison tables."""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import ConfigError


def _prf(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


@dataclass(frozen=True)
class LabelScore:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float


@dataclass(frozen=True)
class EvalReport:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float
    per_label: Mapping[str, LabelScore] = field(default_factory=dict)

    @classmethod
    def from_counts(cls, counts: Mapping[str, tuple[int, int, int]]) -> "EvalReport":
        per_label = {}
        for lab in sorted(counts):
            tp, fp, fn = counts[lab]
            per_label[lab] = LabelScore(tp, fp, fn, *_prf(tp, fp, fn))
        tp = sum(c[0] for c in counts.values())
        fp = sum(c[1] for c in counts.values())
        fn = sum(c[2] for c in counts.values())
        return cls(tp, fp, fn, *_prf(tp, fp, fn), per_label=per_label)

    def summary(self) -> str:
        return f"P {self.precision:.3f} R {self.recall:.3f} F1 {self.f1:.3f}"

    def to_text(self, per_label: bool = False) -> str:
        lines = [f"{'label':<24} {'tp':>6} {'fp':>6} {'fn':>6} {'P':>7} {'R':>7} {'F1':>7}"]
        rows = list(self.per_label.items()) if per_label else []
        rows.append(("micro", self))
        for name, s in rows:
            lines.append(
                f"{name:<24} {s.tp:>6} {s.fp:>6} {s.fn:>6} {s.precision:>7.3f} {s.recall:>7.3f} {s.f1:>7.3f}"
            )
        lines.append(self.summary())
        return "\n".join(lines) + "\n"

    def to_tsv(self, per_label: bool = True) -> str:
        lines = ["label\ttp\tfp\tfn\tprecision\trecall\tf1"]
        rows = list(self.per_label.items()) if per_label else []
        rows.append(("micro", self))
        for name, s in rows:
            lines.append(f"{name}\t{s.tp}\t{s.fp}\t{s.fn}\t{s.precision:.6f}\t{s.recall:.6f}\t{s.f1:.6f}")
        return "\n".join(lines) + "\n"


def evaluate_spans(gold: Iterable, predicted: Iterable) -> EvalReport:
    """Score keyed spans ``(doc_id, start, end, label)``; each gold span matches once."""
    g = Counter(gold)
    p = Counter(predicted)
    labels = {k[-1] for k in g} | {k[-1] for k in p}
    counts = {lab: [0, 0, 0] for lab in labels}
    for key in g.keys() | p.keys():
        lab = key[-1]
        tp = min(g[key], p[key])
        counts[lab][0] += tp
        counts[lab][1] += p[key] - tp
        counts[lab][2] += g[key] - tp
    return EvalReport.from_counts({k: tuple(v) for k, v in counts.items()})


def evaluate(gold: Sequence, predicted: Sequence) -> EvalReport:
    """Exact-match scoring of predicted against gold documents (matched by id)."""
    gold_ids = [d.id for d in gold]
    pred_ids = [d.id for d in predicted]
    if set(gold_ids) != set(pred_ids) or len(gold_ids) != len(pred_ids):
        missing = sorted(set(gold_ids) - set(pred_ids))
        extra = sorted(set(pred_ids) - set(gold_ids))
        raise ConfigError(f"document ids differ: missing {missing}, extra {extra}")
    g = [(d.id, a.start, a.end, a.label) for d in gold for a in d.annotations]
    p = [(d.id, a.start, a.end, a.label) for d in predicted for a in d.annotations]
    return evaluate_spans(g, p)


ReportLike = Union[EvalReport, Mapping[str, EvalReport]]


@dataclass
class ComparisonTable:
    tasks: list
    rows: list  # (name, {task: report}, {task: f1 delta in points})
    baseline: Optional[str]

    def to_text(self) -> str:
        head = f"{'system':<32}"
        for t in self.tasks:
            head += f" | {t + ' P':>9} {'R':>6} {'F1':>6} {'dF1':>6}"
        lines = [head, "-" * len(head)]
        for name, reps, deltas in self.rows:
            line = f"{name:<32}"
            for t in self.tasks:
                r = reps.get(t)
                if r is None:
                    line += f" | {'':>9} {'':>6} {'':>6} {'':>6}"
                    continue
                line += (
                    f" | {100 * r.precision:>9.1f} {100 * r.recall:>6.1f} {100 * r.f1:>6.1f} {deltas[t]:>+6.1f}"
                )
            lines.append(line)
        return "\n".join(lines) + "\n"

    def to_tsv(self) -> str:
        cols = ["system"]
        for t in self.tasks:
            cols += [f"{t}_precision", f"{t}_recall", f"{t}_f1", f"{t}_f1_delta"]
        lines = ["\t".join(cols)]
        for name, reps, deltas in self.rows:
            vals = [name]
            for t in self.tasks:
                r = reps.get(t)
                vals += (
                    ["", "", "", ""] if r is None
                    else [f"{100 * r.precision:.2f}", f"{100 * r.recall:.2f}", f"{100 * r.f1:.2f}", f"{deltas[t]:+.2f}"]
                )
            lines.append("\t".join(vals))
        return "\n".join(lines) + "\n"


def compare(reports: Sequence[tuple[str, ReportLike]], baseline: Optional[str] = None) -> ComparisonTable:
    """Tabulate systems (rows) against tasks, with F1 deltas in points vs ``baseline``.

    A plain :class:`EvalReport` counts as a single task named ``"task"``.
    The baseline defaults to the first row.
    """
    if not reports:
        raise ConfigError("nothing to compare")
    norm = []
    tasks: list = []
    for name, rep in reports:
        reps = {"task": rep} if isinstance(rep, EvalReport) else dict(rep)
        for t in reps:
            if t not in tasks:
                tasks.append(t)
        norm.append((name, reps))
    names = [n for n, _ in norm]
    if baseline is None:
        baseline = names[0]
    if baseline not in names:
        raise ConfigError(f"baseline {baseline!r} is not among {names}")
    base = dict(norm)[baseline]
    rows = []
    for name, reps in norm:
        deltas = {t: 100 * (reps[t].f1 - base[t].f1) if t in base else 0.0 for t in reps}
        rows.append((name, reps, deltas))
    return ComparisonTable(tasks, rows, baseline)
