"""Discrete Hopfield network with Hebbian storage.

States are int8 vectors over {-1, 0, +1}. A zero entry is a *neutral*
neuron: it appears when a neuron's local field is exactly zero, and it is
kept (not forced to +1 or -1) in later iterations.

    W = (1/N) sum_k x^k (x^k)^T,  w_ii = 0
    E(x) = -1/2 x^T W x - I.x
    x' = sgn(W x + I),  sgn(0) = 0     (synchronous update)
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .errors import (
    DimensionError,
    EmptyPatternListError,
    PatternError,
    PatternLengthError,
    ZeroEntryError,
)

STATE_DTYPE = np.int8


def as_pattern(values) -> np.ndarray:
    """Coerce ``values`` to a read-only int8 state vector over {-1, 0, 1}."""
    arr = np.asarray(values)
    if arr.ndim != 1:
        raise DimensionError(f"pattern must be 1-d, got shape {arr.shape}")
    if arr.size < 2:
        raise PatternLengthError("pattern needs at least 2 neurons")
    if not np.all(np.isin(arr, (-1, 0, 1))):
        raise PatternError("pattern entries must be -1, 0 or +1")
    out = arr.astype(STATE_DTYPE)
    out.flags.writeable = False
    return out


def _check_training_patterns(patterns) -> np.ndarray:
    if patterns is None or len(patterns) == 0:
        raise EmptyPatternListError("at least one pattern is required")
    lengths = {len(p) for p in patterns}
    if len(lengths) != 1:
        raise PatternLengthError(f"patterns have mixed lengths {sorted(lengths)}")
    X = np.vstack([as_pattern(p) for p in patterns]).astype(np.int64)
    if np.any(X == 0):
        rows = sorted(set(np.nonzero(X == 0)[0].tolist()))
        raise ZeroEntryError(f"training patterns {rows} contain 0 entries")
    return X


def raw_outer_product(pattern) -> np.ndarray:
    """Unnormalised X X^T with the diagonal left in place.

    Only useful for checking the hand-worked 7-neuron storage example; the
    trainer proper is :func:`hebbian_train`.
    """
    x = np.asarray(pattern, dtype=np.int64)
    return np.outer(x, x)


def hebbian_train(patterns: Sequence) -> np.ndarray:
    """Store ``patterns`` (each strictly +/-1) in a weight matrix.

    Returns a read-only float64 N x N matrix, symmetric with a zero
    diagonal.
    """
    X = _check_training_patterns(patterns)
    n = X.shape[1]
    # integer accumulation keeps the matrix exactly symmetric
    counts = X.T @ X
    np.fill_diagonal(counts, 0)
    W = counts.astype(np.float64) / n
    W.flags.writeable = False
    return W


def _check_dims(W: np.ndarray, x: np.ndarray, bias: Optional[np.ndarray] = None):
    if W.ndim != 2 or W.shape[0] != W.shape[1]:
        raise DimensionError(f"weights must be square, got {W.shape}")
    if x.shape != (W.shape[0],):
        raise DimensionError(
            f"state of length {x.shape[0] if x.ndim else 0} does not match "
            f"{W.shape[0]} neurons"
        )
    if bias is not None and np.shape(bias) != (W.shape[0],):
        raise DimensionError(f"bias of shape {np.shape(bias)} does not match weights")


@dataclass(frozen=True)
class DynamicsConfig:
    """Settings for the synchronous update loop.

    ``tie_tol`` is the magnitude below which a local field counts as an
    exact tie (sgn -> 0). Hebbian fields are multiples of 1/N, so any
    tolerance well under 1/N only absorbs float rounding.
    """

    max_iterations: int = 100
    bias: Optional[np.ndarray] = None
    tie_tol: float = 1e-10

    def __post_init__(self):
        if int(self.max_iterations) < 1:
            raise ValueError("max_iterations must be >= 1")
        if self.tie_tol < 0:
            raise ValueError("tie_tol must be non-negative")
        if self.bias is not None:
            b = np.asarray(self.bias, dtype=np.float64).copy()
            b.flags.writeable = False
            object.__setattr__(self, "bias", b)

    def bias_for(self, n: int) -> np.ndarray:
        if self.bias is None:
            return np.zeros(n)
        if self.bias.shape != (n,):
            raise DimensionError(f"bias length {self.bias.shape} != {n} neurons")
        return self.bias

    def __eq__(self, other):
        if not isinstance(other, DynamicsConfig):
            return NotImplemented
        if (self.max_iterations, self.tie_tol) != (other.max_iterations, other.tie_tol):
            return False
        if self.bias is None or other.bias is None:
            return self.bias is None and other.bias is None
        return np.array_equal(self.bias, other.bias)

    __hash__ = None


def energy(W: np.ndarray, x, bias=None) -> float:
    x = np.asarray(x, dtype=np.float64)
    _check_dims(W, x, bias)
    e = -0.5 * float(x @ W @ x)
    if bias is not None:
        e -= float(np.dot(bias, x))
    return e


def local_field(W: np.ndarray, x, cfg: DynamicsConfig = DynamicsConfig()) -> np.ndarray:
    xf = np.asarray(x, dtype=np.float64)
    _check_dims(W, xf)
    return W @ xf + cfg.bias_for(W.shape[0])


def step(W: np.ndarray, x, cfg: DynamicsConfig = DynamicsConfig()) -> np.ndarray:
    """One synchronous update of every neuron from the same input state."""
    h = local_field(W, x, cfg)
    out = np.sign(h).astype(STATE_DTYPE)
    out[np.abs(h) <= cfg.tie_tol] = 0
    return out


@dataclass
class NetworkTrace:
    states: list
    energies: list
    converged: bool

    @property
    def final(self) -> np.ndarray:
        return self.states[-1]

    @property
    def iterations(self) -> int:
        return len(self.states) - 1

    @property
    def fully_bipolar(self) -> bool:
        return all(not np.any(s == 0) for s in self.states)


def run_to_convergence(
    W: np.ndarray, x0, cfg: DynamicsConfig = DynamicsConfig()
) -> NetworkTrace:
    """Iterate :func:`step` until the state stops changing.

    Stops after ``cfg.max_iterations`` updates; a trace that hits the cap
    (e.g. a synchronous 2-cycle) comes back with ``converged=False``.
    """
    x = np.asarray(x0).astype(STATE_DTYPE)
    _check_dims(W, x)
    bias = cfg.bias_for(W.shape[0])
    states = [x]
    energies = [energy(W, x, bias)]
    converged = False
    for _ in range(cfg.max_iterations):
        nxt = step(W, x, cfg)
        states.append(nxt)
        energies.append(energy(W, nxt, bias))
        if np.array_equal(nxt, x):
            converged = True
            break
        x = nxt
    return NetworkTrace(states=states, energies=energies, converged=converged)


class MatchKind(str, enum.Enum):
    RETRIEVAL = "retrieval"
    REVERSED = "reversed"
    SPURIOUS = "spurious"


@dataclass(frozen=True)
class MatchOutcome:
    kind: MatchKind
    index: Optional[int] = None
    overlap: float = 0.0


def overlap(final, stored: Sequence) -> float:
    """max_k |final . x^k| / N."""
    f = np.asarray(final, dtype=np.float64)
    return max(abs(float(f @ np.asarray(s, dtype=np.float64))) for s in stored) / f.size


def match_state(final, stored: Sequence) -> MatchOutcome:
    f = np.asarray(final)
    for s in stored:
        if np.shape(s) != f.shape:
            raise DimensionError(
                f"final state length {f.size} != stored length {np.size(s)}"
            )
    ov = overlap(f, stored)
    for k, s in enumerate(stored):
        if np.array_equal(f, s):
            return MatchOutcome(MatchKind.RETRIEVAL, k, ov)
    for k, s in enumerate(stored):
        if np.array_equal(f, -np.asarray(s)):
            return MatchOutcome(MatchKind.REVERSED, k, ov)
    return MatchOutcome(MatchKind.SPURIOUS, None, ov)


def format_state(x) -> str:
    """Render a state as one glyph per neuron: '+', '0' or '-'."""
    return "".join("+" if v > 0 else "-" if v < 0 else "0" for v in np.asarray(x))


__all__ = [
    "DynamicsConfig",
    "MatchKind",
    "MatchOutcome",
    "NetworkTrace",
    "as_pattern",
    "energy",
    "format_state",
    "hebbian_train",
    "local_field",
    "match_state",
    "overlap",
    "raw_outer_product",
    "run_to_convergence",
    "step",
]
