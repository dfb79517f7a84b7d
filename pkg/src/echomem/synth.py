"""Synthetic echolocation-like fragments for demos and end-to-end tests.

Each "call" is a downward linear FM sweep under a flat-top envelope with
additive white Gaussian noise at a set SNR. Silences are low-level noise.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

import numpy as np

from .pipeline import SILENCE
from .wav import Waveform, write_wav


def tukey(n: int, alpha: float = 0.25) -> np.ndarray:
    """Flat-top window with raised-cosine tapers over ``alpha`` of its length."""
    if alpha <= 0:
        return np.ones(n)
    x = np.linspace(0.0, 1.0, n)
    w = np.ones(n)
    edge = alpha / 2
    lo = x < edge
    hi = x > 1 - edge
    w[lo] = 0.5 * (1 + np.cos(np.pi * (x[lo] / edge - 1)))
    w[hi] = 0.5 * (1 + np.cos(np.pi * ((x[hi] - 1) / edge + 1)))
    return w


def fm_chirp(
    center_hz: float,
    bandwidth_hz: float,
    duration_s: float,
    sample_rate: int,
    amplitude: float = 0.5,
    taper: float = 0.25,
) -> np.ndarray:
    """Downward linear sweep across ``bandwidth_hz`` centred on ``center_hz``."""
    n = max(2, int(round(duration_s * sample_rate)))
    t = np.arange(n) / sample_rate
    f_start = center_hz + bandwidth_hz / 2
    sweep = -bandwidth_hz / (n / sample_rate)
    phase = 2 * np.pi * (f_start * t + 0.5 * sweep * t**2)
    return amplitude * tukey(n, taper) * np.sin(phase)


def tone(freq_hz: float, n: int, sample_rate: int, amplitude: float = 0.5, phase: float = 0.0):
    return amplitude * np.sin(2 * np.pi * freq_hz * np.arange(n) / sample_rate + phase)


def add_noise(x: np.ndarray, snr_db: float, rng: np.random.Generator) -> np.ndarray:
    """Add white noise so that mean(x**2) / noise variance = 10**(snr_db/10)."""
    sigma = np.sqrt(np.mean(x**2) / 10 ** (snr_db / 10))
    return x + rng.normal(0.0, sigma, x.size)


@dataclass(frozen=True)
class SyntheticSpec:
    n_a: int = 4916
    n_b: int = 5064
    n_silence: int = 404
    label_a: str = "PIPI"
    label_b: str = "PIPY"
    center_a: float = 46_000.0
    center_b: float = 55_000.0
    jitter_hz: float = 0.0
    bandwidth_hz: tuple = (3_000.0, 6_000.0)
    duration_s: tuple = (1.5e-3, 5e-3)
    amplitude: tuple = (0.1, 0.8)
    snr_db: float = 20.0
    silence_duration_s: tuple = (10e-3, 50e-3)
    silence_rms: float = 1e-4
    sample_rate: int = 256_000

    @property
    def total(self) -> int:
        return self.n_a + self.n_b + self.n_silence


@dataclass(frozen=True)
class SyntheticFragment:
    source_id: str
    truth: str
    samples: np.ndarray
    sample_rate: int

    def waveform(self) -> Waveform:
        return Waveform(self.samples, self.sample_rate, self.source_id)


def exemplar_waveforms(spec: SyntheticSpec = SyntheticSpec()) -> list:
    """One clean, centred call per class."""
    out = []
    for label, centre in ((spec.label_a, spec.center_a), (spec.label_b, spec.center_b)):
        x = fm_chirp(centre, 4_000.0, 3e-3, spec.sample_rate, 0.5)
        out.append((label, Waveform(x, spec.sample_rate, f"exemplar_{label}")))
    return out


def generate(spec: SyntheticSpec = SyntheticSpec(), seed: int = 0) -> Iterator[SyntheticFragment]:
    """Yield the fragments in a fixed order: class A, class B, silences.

    Fragment ``i`` draws from its own stream seeded by (seed, i), so any
    subset is reproducible on its own.
    """
    plan = (
        [(spec.label_a, spec.center_a)] * spec.n_a
        + [(spec.label_b, spec.center_b)] * spec.n_b
        + [(SILENCE, None)] * spec.n_silence
    )
    for i, (label, centre) in enumerate(plan):
        rng = np.random.default_rng([seed, i])
        if centre is None:
            n = int(rng.uniform(*spec.silence_duration_s) * spec.sample_rate)
            x = rng.normal(0.0, spec.silence_rms, n)
        else:
            x = fm_chirp(
                centre + rng.uniform(-spec.jitter_hz, spec.jitter_hz),
                rng.uniform(*spec.bandwidth_hz),
                rng.uniform(*spec.duration_s),
                spec.sample_rate,
                rng.uniform(*spec.amplitude),
            )
            x = add_noise(x, spec.snr_db, rng)
        yield SyntheticFragment(f"{label.lower()}_{i:05d}.wav", label, x, spec.sample_rate)


def write_dataset(
    out_dir, spec: SyntheticSpec = SyntheticSpec(), seed: int = 0, truth_name: Optional[str] = "truth.csv"
) -> list:
    """Write every fragment as 16-bit PCM plus a ``source_id,label`` truth CSV."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    frags = list(generate(spec, seed))
    for f in frags:
        (out_dir / f.source_id).write_bytes(write_wav(f.samples, f.sample_rate))
    if truth_name:
        with open(out_dir / truth_name, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["source_id", "label"])
            w.writerows((f.source_id, f.truth) for f in frags)
    return frags
