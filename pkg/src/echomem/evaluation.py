"""Scoring against ground truth, and a timing / memory harness."""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Optional, Sequence

import numpy as np
import psutil

from . import hopfield
from .errors import BenchmarkError, ScoringError
from .pipeline import ERROR, FILTERED, RESERVED_LABELS, SILENCE, UNID, classify_batch, train

EXCLUDED_PREDICTIONS = frozenset({SILENCE, FILTERED, ERROR})


@dataclass(frozen=True, eq=False)
class ConfusionMatrix:
    """Rows are true classes; columns are the same classes followed by UnID.

    Fragments predicted Silence/Filtered/Error, or whose truth is Silence,
    are kept out of ``counts`` and tallied in ``excluded`` instead.
    """

    classes: tuple
    counts: np.ndarray
    excluded: dict = field(default_factory=dict)

    def __post_init__(self):
        c = np.array(self.counts, dtype=np.int64)
        if c.shape != (len(self.classes), len(self.classes) + 1):
            raise ScoringError(
                f"counts shape {c.shape} does not fit {len(self.classes)} classes + UnID"
            )
        if np.any(c < 0):
            raise ScoringError("counts must be non-negative")
        c.flags.writeable = False
        object.__setattr__(self, "counts", c)
        object.__setattr__(self, "classes", tuple(self.classes))

    @property
    def columns(self) -> tuple:
        return self.classes + (UNID,)

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def support(self, label: str) -> int:
        return int(self.counts[self.classes.index(label)].sum())

    def cell(self, truth: str, predicted: str) -> int:
        return int(self.counts[self.classes.index(truth), self.columns.index(predicted)])

    def relabel(self, order: Sequence[str]) -> "ConfusionMatrix":
        """Same matrix with rows and class columns permuted to ``order``."""
        idx = [self.classes.index(c) for c in order]
        cols = idx + [len(self.classes)]
        return ConfusionMatrix(tuple(order), self.counts[np.ix_(idx, cols)], dict(self.excluded))

    def __eq__(self, other):
        if not isinstance(other, ConfusionMatrix):
            return NotImplemented
        return (
            self.classes == other.classes
            and np.array_equal(self.counts, other.counts)
            and self.excluded == other.excluded
        )

    __hash__ = None


def _pair(r):
    if hasattr(r, "label"):
        return r.source_id, r.label
    return r[0], r[1]


def score(results, truth: Mapping[str, str], classes: Optional[Sequence[str]] = None) -> ConfusionMatrix:
    """Build a confusion matrix from results (or ``(source_id, label)`` pairs)."""
    pairs = [_pair(r) for r in results]
    for sid, _ in pairs:
        if sid not in truth:
            raise ScoringError(f"no truth label for fragment {sid!r}")
    for sid, _ in pairs:
        if truth[sid] in RESERVED_LABELS - {SILENCE}:
            raise ScoringError(f"{truth[sid]!r} cannot be a truth label (fragment {sid!r})")
    if classes is None:
        seen = {truth[sid] for sid, _ in pairs} | {p for _, p in pairs}
        classes = sorted(seen - RESERVED_LABELS)
    classes = tuple(classes)
    cols = classes + (UNID,)
    counts = np.zeros((len(classes), len(cols)), dtype=np.int64)
    excluded: dict = {}
    for sid, pred in pairs:
        t = truth[sid]
        if pred in EXCLUDED_PREDICTIONS or t == SILENCE:
            excluded[(t, pred)] = excluded.get((t, pred), 0) + 1
            continue
        if t not in classes:
            raise ScoringError(f"unknown truth label {t!r} for fragment {sid!r}")
        if pred not in cols:
            raise ScoringError(f"unknown predicted label {pred!r} for fragment {sid!r}")
        counts[classes.index(t), cols.index(pred)] += 1
    return ConfusionMatrix(classes, counts, excluded)


@dataclass(frozen=True)
class ClassMetrics:
    precision: float
    recall: float
    f1: float
    support: int
    zero_support: bool = False


@dataclass(frozen=True)
class ClassificationReport:
    per_class: dict
    accuracy: float
    accuracy_exact: Fraction
    total: int
    unid: int
    excluded: dict

    @property
    def classes(self) -> tuple:
        return tuple(self.per_class)


def _ratio(num: int, den: int) -> float:
    return num / den if den else 0.0


def report(cm: ConfusionMatrix) -> ClassificationReport:
    """One-vs-rest precision / recall / F1 per class plus overall accuracy.

    UnID predictions lower the recall of their true class but are nobody's
    false positive. Undefined ratios are reported as 0.
    """
    if not cm.classes:
        raise ScoringError("cannot report on an empty confusion matrix")
    c = cm.counts
    per = {}
    for i, label in enumerate(cm.classes):
        tp = int(c[i, i])
        predicted = int(c[:, i].sum())
        support = int(c[i].sum())
        p = _ratio(tp, predicted)
        r = _ratio(tp, support)
        f1 = 2 * p * r / (p + r) if p + r else 0.0
        per[label] = ClassMetrics(p, r, f1, support, zero_support=support == 0)
    total = cm.total
    acc = Fraction(int(np.trace(c[:, : len(cm.classes)])), total) if total else Fraction(0)
    return ClassificationReport(
        per_class=per,
        accuracy=float(acc),
        accuracy_exact=acc,
        total=total,
        unid=int(c[:, -1].sum()),
        excluded=dict(cm.excluded),
    )


def format_report(rep: ClassificationReport, title: str = "") -> str:
    lines = []
    if title:
        lines.append(title)
    lines.append(f"{'Class':<12}{'Precision':>10}{'Recall':>10}{'F1':>10}{'Support':>10}")
    for label, m in rep.per_class.items():
        flag = "  (no support)" if m.zero_support else ""
        lines.append(
            f"{label:<12}{m.precision:>10.2f}{m.recall:>10.2f}{m.f1:>10.2f}{m.support:>10d}{flag}"
        )
    lines.append(f"Overall accuracy: {rep.accuracy:.2f}   total: {rep.total}   UnID: {rep.unid}")
    if rep.excluded:
        ex = ", ".join(f"{t}->{p}: {n}" for (t, p), n in sorted(rep.excluded.items()))
        lines.append(f"Excluded from metrics: {ex}")
    return "\n".join(lines) + "\n"


def report_rows(rep: ClassificationReport) -> list:
    rows = [["class", "precision", "recall", "f1", "support"]]
    for label, m in rep.per_class.items():
        rows.append([label, f"{m.precision:.6f}", f"{m.recall:.6f}", f"{m.f1:.6f}", str(m.support)])
    rows.append(["accuracy", "", "", f"{rep.accuracy:.6f}", str(rep.total)])
    return rows


def confusion_rows(cm: ConfusionMatrix) -> list:
    rows = [["true\\predicted", *cm.columns]]
    for i, label in enumerate(cm.classes):
        rows.append([label, *(str(int(v)) for v in cm.counts[i])])
    return rows


class RssSampler:
    """Background thread recording the peak resident set size.

    Children are included, so a process-pool batch is measured in full.
    """

    def __init__(self, interval: float = 0.05):
        self.interval = interval
        self.peak = 0
        self.samples = 0
        self._stop = threading.Event()
        self._proc = psutil.Process()
        self._thread = threading.Thread(target=self._run, daemon=True)

    def _rss(self) -> int:
        total = self._proc.memory_info().rss
        for child in self._proc.children(recursive=True):
            try:
                total += child.memory_info().rss
            except psutil.Error:
                pass
        return total

    def _run(self):
        while True:
            self.peak = max(self.peak, self._rss())
            self.samples += 1
            if self._stop.wait(self.interval):
                break

    def __enter__(self):
        self._thread.start()
        return self

    def __exit__(self, *exc):
        self._stop.set()
        self._thread.join()
        self.peak = max(self.peak, self._rss())

    @property
    def peak_mb(self) -> float:
        return self.peak / 1e6


@dataclass
class BenchmarkResult:
    runs: int
    n_fragments: int
    train_times: list
    classify_times: list
    peak_rss_mb: float

    @property
    def train_time(self) -> float:
        return float(np.mean(self.train_times))

    @property
    def classify_time(self) -> float:
        return float(np.mean(self.classify_times))

    @property
    def total_time(self) -> float:
        return self.train_time + self.classify_time

    @property
    def per_fragment_time(self) -> float:
        return self.classify_time / self.n_fragments


def benchmark(model, inputs, runs: int = 5, jobs: int = 1, exemplars=None) -> BenchmarkResult:
    """Mean wall-clock over ``runs`` repetitions and peak RSS across all of them.

    With ``exemplars`` the training time covers spectra and encoding too;
    without, it times the Hebbian step on the model's stored patterns.
    """
    if model is None or getattr(model, "n_patterns", 0) < 1:
        raise BenchmarkError("benchmark needs a trained model with stored patterns")
    inputs = list(inputs)
    if not inputs:
        raise BenchmarkError("benchmark needs at least one input fragment")
    if runs < 1:
        raise BenchmarkError("runs must be >= 1")
    train_times, classify_times = [], []
    with RssSampler() as rss:
        for _ in range(runs):
            t0 = time.perf_counter()
            if exemplars:
                train(exemplars, model.encoding, model.dynamics, model.band_reject)
            else:
                hopfield.hebbian_train(model.stored_patterns)
            t1 = time.perf_counter()
            classify_batch(model, inputs, jobs=jobs)
            t2 = time.perf_counter()
            train_times.append(t1 - t0)
            classify_times.append(t2 - t1)
    return BenchmarkResult(runs, len(inputs), train_times, classify_times, rss.peak_mb)


def format_benchmark(b: BenchmarkResult) -> str:
    return (
        f"{'metric':<26}{'value':>14}\n"
        f"{'runs':<26}{b.runs:>14d}\n"
        f"{'fragments':<26}{b.n_fragments:>14d}\n"
        f"{'train time (ms)':<26}{b.train_time * 1e3:>14.3f}\n"
        f"{'classify time (s)':<26}{b.classify_time:>14.3f}\n"
        f"{'total time (s)':<26}{b.total_time:>14.3f}\n"
        f"{'per fragment (ms)':<26}{b.per_fragment_time * 1e3:>14.4f}\n"
        f"{'peak RSS (MB)':<26}{b.peak_rss_mb:>14.2f}\n"
    )
