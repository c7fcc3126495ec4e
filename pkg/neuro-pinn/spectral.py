"""Dominant-frequency extraction from the observed voltage."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from errors import ContractViolation, NoSignal
from sim import TimeSeries

log = logging.getLogger(__name__)

MIN_SAMPLES = 4
ENERGY_CONVENTIONS = ("raw", "centered")


@dataclass(frozen=True)
class Spectrum:
    """
    One-sided power spectrum; freqs in cycles/ms, psd = |DFT|^2.

    ``centered`` spectra come from the mean-removed signal (psd[0] is zero
    up to rounding). Raw spectra keep the mean, so psd[0] = (sum of x)^2.
    """

    freqs: np.ndarray
    psd: np.ndarray
    n_samples: int
    dt: float
    centered: bool = True

    def __post_init__(self):
        if self.freqs.shape != self.psd.shape:
            raise ContractViolation("freqs and psd lengths differ")
        if self.freqs[0] != 0 or np.any(np.diff(self.freqs) <= 0):
            raise ContractViolation("freqs must start at 0 and increase strictly")
        if np.any(self.psd < 0):
            raise ContractViolation("psd entries must be non-negative")

    def total_energy(self) -> float:
        """Energy over the full two-sided spectrum (Parseval: N * sum of squares)."""
        # bins 1..K appear twice in the two-sided spectrum, except Nyquist for even N
        doubled = self.psd[1:].sum() * 2.0
        if self.n_samples % 2 == 0:
            doubled -= self.psd[-1]
        return float(self.psd[0] + doubled)


@dataclass(frozen=True)
class FrequencySelection:
    """
    Frequencies kept by cumulative-energy thresholding, strongest first.

    ``angular_freqs`` never holds the DC bin. When the DC bin was ranked
    and kept (raw energy), ``dc_selected`` is set and it counts towards
    ``m_star``.
    """

    threshold: float
    angular_freqs: Tuple[float, ...]
    bins: Tuple[int, ...]
    n_samples: int
    dt: float
    dc_selected: bool = False

    def __post_init__(self):
        if len(self.angular_freqs) < 1:
            raise ContractViolation("selection needs at least one frequency")
        if len(self.angular_freqs) != len(self.bins):
            raise ContractViolation("angular_freqs and bins lengths differ")
        if min(self.angular_freqs) <= 0:
            raise ContractViolation("selected frequencies must be positive (DC excluded)")

    @property
    def m_star(self) -> int:
        return len(self.angular_freqs) + int(self.dc_selected)

    @classmethod
    def from_bins(cls, bins: Sequence[int], n_samples: int, dt: float, threshold: float = 100.0):
        """Selection of explicit DFT bins (k >= 1)."""
        bins = tuple(int(k) for k in bins)
        omegas = tuple(2.0 * np.pi * k / (n_samples * dt) for k in bins)
        return cls(float(threshold), omegas, bins, int(n_samples), float(dt))

    def as_record(self) -> dict:
        return {
            "p": self.threshold,
            "m_star": self.m_star,
            "dc_selected": self.dc_selected,
            "angular_freqs": list(self.angular_freqs),
        }


def power_spectrum(series: TimeSeries, centered: bool = True) -> Spectrum:
    """
    One-sided PSD of the signal, mean-removed unless ``centered`` is False.

    Bin k sits at f_k = k / (N dt) cycles/ms for k = 0..N//2. No window
    is applied.
    """
    n = len(series)
    if n < MIN_SAMPLES:
        raise ContractViolation(f"need at least {MIN_SAMPLES} samples, got {n}")
    x = series.values - series.values.mean() if centered else series.values
    coeffs = np.fft.rfft(x)
    psd = np.abs(coeffs) ** 2
    freqs = np.fft.rfftfreq(n, d=series.dt)
    return Spectrum(freqs, psd, n, series.dt, centered)


def select_dominant_frequencies(spec: Spectrum, p: float) -> FrequencySelection:
    """
    Smallest set of strongest bins holding at least p percent of the energy.

    Centered spectra rank bins 1..K. Raw spectra rank bins 0..K, so a large
    mean takes the first place and is counted in m*. A raw selection that
    would hold the DC bin alone also keeps the strongest nonzero bin.

    Args:
        spec: Spectrum of the observed signal
        p: Cumulative energy threshold in percent, 0 < p < 100

    Returns:
        FrequencySelection with angular frequencies 2*pi*f (rad/ms)
    """
    if not 0 < p < 100:
        raise ContractViolation(f"threshold p must lie in (0, 100), got {p}")
    first = 1 if spec.centered else 0
    power = spec.psd[first:]
    if not spec.psd[1:].sum() > 0:
        raise NoSignal("spectrum has no energy outside the DC bin")

    order = np.argsort(-power, kind="stable") + first
    cumulative = np.cumsum(spec.psd[order]) / power.sum()
    m = int(np.argmax(cumulative >= p / 100.0)) + 1
    kept = [int(k) for k in order[:m]]
    dc_selected = 0 in kept
    bins = [k for k in kept if k != 0]
    if not bins:
        bins = [int(order[1])]
    omegas = tuple(float(2.0 * np.pi * spec.freqs[k]) for k in bins)
    sel = FrequencySelection(float(p), omegas, tuple(bins), spec.n_samples, spec.dt, dc_selected)
    log.debug("p=%g%% keeps %d of %d bins (dc %s)", p, sel.m_star, len(power), dc_selected)
    return sel


def filtered_reconstruction(series: TimeSeries, selection: FrequencySelection) -> TimeSeries:
    """Inverse DFT keeping the selected bins (and conjugates) plus the mean."""
    n = len(series)
    if selection.n_samples != n:
        raise ContractViolation("selection was derived from a series of another length")
    mean = series.values.mean()
    coeffs = np.fft.rfft(series.values - mean)
    kept = np.zeros_like(coeffs)
    idx = list(selection.bins)
    kept[idx] = coeffs[idx]
    return series.with_values(np.fft.irfft(kept, n=n) + mean)


def extract(series: TimeSeries, p: float, energy: str = "centered") -> Tuple[Spectrum, FrequencySelection]:
    """power_spectrum followed by select_dominant_frequencies."""
    if energy not in ENERGY_CONVENTIONS:
        raise ContractViolation(f"energy must be one of {ENERGY_CONVENTIONS}, got {energy!r}")
    spec = power_spectrum(series, centered=energy == "centered")
    return spec, select_dominant_frequencies(spec, p)
