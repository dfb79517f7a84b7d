"""Spectral front end: power spectrum, peak picking and neuron encoding.

Power is reported as ``|rfft(w * x)|**2 / sum(w)**2`` with a periodic Hann
window ``w``, so a sinusoid of amplitude A peaks near A**2 / 4 whatever the
fragment length. Fragments longer than the FFT length are split into
half-overlapping segments whose spectra are averaged.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np

from .errors import BandMapError, FragmentTooShortError, SpectrumError
from .hopfield import STATE_DTYPE
from .wav import Waveform

MIN_FFT_LENGTH = 64
DEFAULT_FFT_CAP = 4096
REJECT_LO_HZ = 49_000.0
REJECT_HI_HZ = 51_000.0


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


@dataclass(frozen=True)
class EncodingConfig:
    band_lo: float = 35_000.0
    band_hi: float = 75_000.0
    n_neurons: int = 64
    activation_threshold: float = 0.5
    silence_power_floor: float = 1e-6
    fft_length: Optional[int] = None
    fft_cap: int = DEFAULT_FFT_CAP

    def __post_init__(self):
        if not 0 < self.band_lo < self.band_hi:
            raise ValueError(f"need 0 < band_lo < band_hi, got {self.band_lo}, {self.band_hi}")
        if int(self.n_neurons) < 2:
            raise ValueError("n_neurons must be >= 2")
        if not 0 < self.activation_threshold <= 1:
            raise ValueError("activation_threshold must lie in (0, 1]")
        if self.silence_power_floor < 0:
            raise ValueError("silence_power_floor must be >= 0")
        if self.fft_length is not None and (
            not _is_pow2(self.fft_length) or self.fft_length < MIN_FFT_LENGTH
        ):
            raise ValueError(f"fft_length must be a power of two >= {MIN_FFT_LENGTH}")
        if not _is_pow2(self.fft_cap) or self.fft_cap < MIN_FFT_LENGTH:
            raise ValueError(f"fft_cap must be a power of two >= {MIN_FFT_LENGTH}")

    def fft_length_for(self, n_samples: int) -> int:
        if self.fft_length is not None:
            return self.fft_length
        nfft = MIN_FFT_LENGTH
        while nfft < n_samples and nfft < self.fft_cap:
            nfft *= 2
        return nfft


@dataclass(frozen=True)
class FrequencyBandMap:
    """N contiguous equal-width bands; band i covers [edges[i], edges[i+1]).

    The last band is closed at ``edges[N]``.
    """

    edges: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.edges, dtype=np.float64).copy()
        if e.ndim != 1 or e.size < 3:
            raise BandMapError("a band map needs at least 2 bands")
        if not np.all(np.diff(e) > 0):
            raise BandMapError("band edges must be strictly ascending")
        e.flags.writeable = False
        object.__setattr__(self, "edges", e)

    @classmethod
    def uniform(cls, band_lo: float, band_hi: float, n: int) -> "FrequencyBandMap":
        return cls(np.linspace(band_lo, band_hi, int(n) + 1))

    @classmethod
    def from_config(cls, cfg: EncodingConfig) -> "FrequencyBandMap":
        return cls.uniform(cfg.band_lo, cfg.band_hi, cfg.n_neurons)

    @property
    def n_bands(self) -> int:
        return self.edges.size - 1

    def indices(self, freqs) -> np.ndarray:
        """Band index per frequency, or -1 outside [edges[0], edges[-1]]."""
        f = np.atleast_1d(np.asarray(freqs, dtype=np.float64))
        idx = np.searchsorted(self.edges, f, side="right") - 1
        idx[f == self.edges[-1]] = self.n_bands - 1
        idx[(f < self.edges[0]) | (f > self.edges[-1])] = -1
        return idx

    def index_of(self, freq: float) -> Optional[int]:
        i = int(self.indices([freq])[0])
        return None if i < 0 else i

    def __eq__(self, other):
        if not isinstance(other, FrequencyBandMap):
            return NotImplemented
        return np.array_equal(self.edges, other.edges)

    __hash__ = None


@dataclass(frozen=True)
class PowerSpectrum:
    bin_freqs: np.ndarray
    power: np.ndarray
    f_max_e: float
    peak_freqs: np.ndarray
    sample_rate: int
    fft_length: int

    @property
    def bin_width(self) -> float:
        return self.sample_rate / self.fft_length

    def band_mask(self, lo: float, hi: float) -> np.ndarray:
        return (self.bin_freqs >= lo) & (self.bin_freqs <= hi)

    def max_power_in(self, lo: float, hi: float) -> float:
        m = self.band_mask(lo, hi)
        return float(self.power[m].max()) if m.any() else 0.0


def hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def local_maxima(power: np.ndarray) -> np.ndarray:
    """Indices of strict local maxima; a flat top reports its first bin.

    The spectrum ends count as lower than any bin.
    """
    p = np.asarray(power)
    if p.size == 0:
        return np.zeros(0, dtype=np.intp)
    starts = np.r_[0, np.flatnonzero(np.diff(p) != 0) + 1]
    vals = p[starts]
    left = np.r_[-np.inf, vals[:-1]]
    right = np.r_[vals[1:], -np.inf]
    return starts[(vals > left) & (vals > right)]


def power_spectrum(samples: np.ndarray, sample_rate: int, nfft: int):
    """Return (bin_freqs, power) for a real signal, segment-averaged if long."""
    x = np.asarray(samples, dtype=np.float64)
    n = x.size
    if n <= nfft:
        w = hann(n)
        spec = np.fft.rfft(x * w, nfft)
        power = (spec.real ** 2 + spec.imag ** 2) / w.sum() ** 2
    else:
        w = hann(nfft)
        hop = nfft // 2
        starts = list(range(0, n - nfft + 1, hop))
        if starts[-1] != n - nfft:
            starts.append(n - nfft)
        segs = np.stack([x[s : s + nfft] for s in starts]) * w
        spec = np.fft.rfft(segs, nfft, axis=1)
        power = (spec.real ** 2 + spec.imag ** 2).mean(axis=0) / w.sum() ** 2
    return np.fft.rfftfreq(nfft, 1.0 / sample_rate), power


def compute_spectrum(w: Waveform, cfg: EncodingConfig = EncodingConfig()) -> PowerSpectrum:
    if w.samples.size < 2:
        raise FragmentTooShortError(f"{w.source_id}: fragment shorter than 2 samples")
    nfft = cfg.fft_length_for(w.samples.size)
    freqs, power = power_spectrum(w.samples, w.sample_rate, nfft)
    f_max_e = float(freqs[int(np.argmax(power))])

    in_band = (freqs >= cfg.band_lo) & (freqs <= cfg.band_hi)
    ref = power[in_band].max() if in_band.any() else power.max()
    cand = local_maxima(power)
    keep = cand[(power[cand] > 0) & (power[cand] >= cfg.activation_threshold * ref)]
    for a in (freqs, power):
        a.flags.writeable = False
    peaks = freqs[keep]
    return PowerSpectrum(freqs, power, f_max_e, peaks, w.sample_rate, nfft)


def is_silence(s: PowerSpectrum, cfg: EncodingConfig = EncodingConfig()) -> bool:
    return s.max_power_in(cfg.band_lo, cfg.band_hi) < cfg.silence_power_floor


def band_reject(s: PowerSpectrum, lo: float = REJECT_LO_HZ, hi: float = REJECT_HI_HZ) -> bool:
    return lo <= s.f_max_e <= hi


def band_reject_49_51(s: PowerSpectrum) -> bool:
    """True if the peak-power frequency lies in [49, 51] kHz."""
    return band_reject(s, REJECT_LO_HZ, REJECT_HI_HZ)


def encode_pattern(
    s: PowerSpectrum, band_map: FrequencyBandMap, cfg: EncodingConfig = EncodingConfig()
) -> np.ndarray:
    """+1 for every band holding a detected peak, -1 elsewhere."""
    if band_map.edges[0] < s.bin_freqs[0] or band_map.edges[-1] > s.bin_freqs[-1]:
        raise BandMapError(
            f"band map [{band_map.edges[0]:g}, {band_map.edges[-1]:g}] Hz lies outside "
            f"the spectrum [0, {s.bin_freqs[-1]:g}] Hz"
        )
    x = -np.ones(band_map.n_bands, dtype=STATE_DTYPE)
    idx = band_map.indices(s.peak_freqs)
    x[idx[idx >= 0]] = 1
    return x


def calibrate_silence_floor(
    silences: Iterable[Waveform], cfg: EncodingConfig = EncodingConfig(), margin_db: float = 6.0
) -> float:
    """Silence floor sitting ``margin_db`` above the loudest known-silent fragment."""
    levels = [compute_spectrum(w, cfg).max_power_in(cfg.band_lo, cfg.band_hi) for w in silences]
    if not levels:
        raise SpectrumError("calibration needs at least one silent fragment")
    return max(levels) * 10.0 ** (margin_db / 10.0)
