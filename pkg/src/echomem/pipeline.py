"""Training from exemplars and (batch) classification of fragments."""

from __future__ import annotations

import logging
import os
import warnings
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from . import hopfield
from .errors import (
    CapacityError,
    DuplicatePatternError,
    EchomemError,
    FragmentError,
    SilentExemplarError,
    TrainingError,
)
from .hopfield import DynamicsConfig, MatchKind, MatchOutcome, NetworkTrace
from .spectrum import (
    EncodingConfig,
    FrequencyBandMap,
    band_reject_49_51,
    compute_spectrum,
    encode_pattern,
    is_silence,
)
from .wav import Waveform, read_wav

log = logging.getLogger(__name__)

UNID = "UnID"
SILENCE = "Silence"
FILTERED = "Filtered"
ERROR = "Error"
RESERVED_LABELS = frozenset({UNID, SILENCE, FILTERED, ERROR})

FORMAT_VERSION = 1
CAPACITY_WARN = 0.15
CAPACITY_REFUSE = 0.5


@dataclass(frozen=True, eq=False)
class TrainedModel:
    weights: np.ndarray
    stored_patterns: np.ndarray  # (p, N) int8, strictly +/-1
    class_labels: tuple
    band_map: FrequencyBandMap
    encoding: EncodingConfig = EncodingConfig()
    dynamics: DynamicsConfig = DynamicsConfig()
    band_reject: bool = False
    format_version: int = FORMAT_VERSION

    def __post_init__(self):
        W = np.array(self.weights, dtype=np.float64)
        X = np.array(self.stored_patterns, dtype=hopfield.STATE_DTYPE)
        if X.ndim == 1:
            X = X[None, :]
        labels = tuple(str(c) for c in self.class_labels)
        p, n = X.shape
        if p < 1:
            raise TrainingError("a model stores at least one pattern")
        if len(labels) != p:
            raise TrainingError(f"{len(labels)} labels for {p} stored patterns")
        if W.shape != (n, n) or self.band_map.n_bands != n:
            raise TrainingError(
                f"dimension mismatch: weights {W.shape}, patterns {X.shape}, "
                f"{self.band_map.n_bands} bands"
            )
        if np.any(X == 0):
            raise TrainingError("stored patterns must be strictly +/-1")
        _check_capacity(p, n)
        W.flags.writeable = False
        X.flags.writeable = False
        object.__setattr__(self, "weights", W)
        object.__setattr__(self, "stored_patterns", X)
        object.__setattr__(self, "class_labels", labels)
        object.__setattr__(self, "band_reject", bool(self.band_reject))

    @property
    def n_neurons(self) -> int:
        return self.weights.shape[0]

    @property
    def n_patterns(self) -> int:
        return self.stored_patterns.shape[0]

    def with_band_reject(self, enabled: bool) -> "TrainedModel":
        return replace(self, band_reject=enabled)

    def __eq__(self, other):
        if not isinstance(other, TrainedModel):
            return NotImplemented
        return (
            np.array_equal(self.weights, other.weights)
            and np.array_equal(self.stored_patterns, other.stored_patterns)
            and self.class_labels == other.class_labels
            and self.band_map == other.band_map
            and self.encoding == other.encoding
            and self.dynamics == other.dynamics
            and self.band_reject == other.band_reject
            and self.format_version == other.format_version
        )

    __hash__ = None


def _check_capacity(p: int, n: int) -> None:
    if p > CAPACITY_REFUSE * n:
        raise CapacityError(f"{p} patterns exceed the hard limit of {CAPACITY_REFUSE} x {n} neurons")
    if p > CAPACITY_WARN * n:
        warnings.warn(
            f"{p} patterns on {n} neurons is above ~{CAPACITY_WARN}N; recall will degrade",
            RuntimeWarning,
            stacklevel=3,
        )


def train(
    exemplars: Sequence[tuple],
    cfg: EncodingConfig = EncodingConfig(),
    dyn: DynamicsConfig = DynamicsConfig(),
    band_reject: bool = False,
) -> TrainedModel:
    """One-shot Hebbian training from one (label, Waveform) pair per class."""
    if not exemplars:
        raise TrainingError("at least one exemplar is required")
    band_map = FrequencyBandMap.from_config(cfg)
    labels, patterns = [], []
    for label, w in exemplars:
        label = str(label)
        if label in RESERVED_LABELS:
            raise TrainingError(f"{label!r} is a reserved label")
        if label in labels:
            raise TrainingError(f"class {label!r} given more than once")
        s = compute_spectrum(w, cfg)
        if is_silence(s, cfg):
            raise SilentExemplarError(label)
        x = encode_pattern(s, band_map, cfg)
        for other, y in zip(labels, patterns):
            if np.array_equal(x, y):
                raise DuplicatePatternError(other, label)
        labels.append(label)
        patterns.append(x)
    W = hopfield.hebbian_train(patterns)
    return TrainedModel(W, np.vstack(patterns), tuple(labels), band_map, cfg, dyn, band_reject)


@dataclass
class ClassificationResult:
    source_id: str
    label: str
    match: Optional[MatchOutcome] = None
    iterations: int = 0
    converged: Optional[bool] = None
    f_max_e: Optional[float] = None
    trace: Optional[NetworkTrace] = None
    error: Optional[str] = None

    @property
    def overlap(self) -> Optional[float]:
        return None if self.match is None else self.match.overlap


def classify(
    model: TrainedModel,
    w: Waveform,
    want_trace: bool = False,
    band_reject: Optional[bool] = None,
) -> ClassificationResult:
    """Label one fragment as a stored class, UnID, Silence or Filtered.

    ``band_reject`` overrides the model's own setting when given.
    """
    reject = model.band_reject if band_reject is None else band_reject
    try:
        s = compute_spectrum(w, model.encoding)
        if is_silence(s, model.encoding):
            return ClassificationResult(w.source_id, SILENCE, f_max_e=s.f_max_e)
        if reject and band_reject_49_51(s):
            return ClassificationResult(w.source_id, FILTERED, f_max_e=s.f_max_e)
        x0 = encode_pattern(s, model.band_map, model.encoding)
        trace = hopfield.run_to_convergence(model.weights, x0, model.dynamics)
    except EchomemError as exc:
        raise FragmentError(w.source_id, exc) from exc

    if trace.converged:
        match = hopfield.match_state(trace.final, model.stored_patterns)
    else:
        # a state still moving at the cap is never a retrieval
        match = MatchOutcome(
            MatchKind.SPURIOUS, None, hopfield.overlap(trace.final, model.stored_patterns)
        )
    label = model.class_labels[match.index] if match.kind is MatchKind.RETRIEVAL else UNID
    return ClassificationResult(
        w.source_id,
        label,
        match=match,
        iterations=trace.iterations,
        converged=trace.converged,
        f_max_e=s.f_max_e,
        trace=trace if want_trace else None,
    )


FragmentSource = Union[Waveform, str, Path, tuple]


def _normalise_source(src: FragmentSource):
    """-> (source_id, payload) where payload is a Waveform, Path or bytes."""
    if isinstance(src, Waveform):
        return src.source_id, src
    if isinstance(src, (str, Path)):
        return Path(src).name, Path(src)
    source_id, payload = src
    if isinstance(payload, str):
        payload = Path(payload)
    return str(source_id), payload


def _load(source_id: str, payload) -> Waveform:
    if isinstance(payload, Waveform):
        return payload
    data = payload.read_bytes() if isinstance(payload, Path) else bytes(payload)
    return read_wav(data, source_id)


def classify_source(
    model: TrainedModel,
    src: FragmentSource,
    want_trace: bool = False,
    band_reject: Optional[bool] = None,
) -> ClassificationResult:
    """Like :func:`classify` but never raises: failures become ``Error`` results."""
    source_id, payload = _normalise_source(src)
    try:
        return classify(model, _load(source_id, payload), want_trace, band_reject)
    except FragmentError as exc:
        return ClassificationResult(source_id, ERROR, error=str(exc.cause))
    except (EchomemError, OSError, ValueError) as exc:
        return ClassificationResult(source_id, ERROR, error=str(exc))


@dataclass
class BatchResult:
    results: list
    counts: Counter = field(default_factory=Counter)

    def __len__(self):
        return len(self.results)


_worker_state: dict = {}


def _init_worker(model, want_trace, band_reject):
    _worker_state["args"] = (model, want_trace, band_reject)


def _work(src):
    model, want_trace, band_reject = _worker_state["args"]
    return classify_source(model, src, want_trace, band_reject)


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else (os.cpu_count() or 1)


def classify_batch(
    model: TrainedModel,
    inputs: Iterable[FragmentSource],
    jobs: int = 1,
    want_trace: bool = False,
    band_reject: Optional[bool] = None,
) -> BatchResult:
    """Classify many fragments; output order always matches input order."""
    inputs = list(inputs)
    jobs = max(1, int(jobs))
    if jobs == 1 or len(inputs) < 2:
        results = [classify_source(model, s, want_trace, band_reject) for s in inputs]
    else:
        chunk = max(1, len(inputs) // (jobs * 8))
        with ProcessPoolExecutor(
            max_workers=jobs, initializer=_init_worker, initargs=(model, want_trace, band_reject)
        ) as pool:
            results = list(pool.map(_work, inputs, chunksize=chunk))
    counts = Counter(r.label for r in results)
    for r in results:
        if r.label == ERROR:
            log.warning("fragment %s failed: %s", r.source_id, r.error)
    return BatchResult(results, counts)
