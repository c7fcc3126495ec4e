"""Tests for power spectra and dominant-frequency selection."""

import sys

import numpy as np
import pytest

from errors import ContractViolation, NoSignal
from models import get_model, load_preset
from runconfig import default_config
from sim import NoiseSpec, TimeSeries, add_noise, simulate
from spectral import (
    FrequencySelection,
    Spectrum,
    extract,
    filtered_reconstruction,
    power_spectrum,
    select_dominant_frequencies,
)

N = 1000
DT = 0.1


def tones(*parts, n=N, dt=DT, offset=-40.0):
    """Sum of sines; each part is (bin, amplitude)."""
    i = np.arange(n)
    v = np.full(n, offset)
    for k, amp in parts:
        v = v + amp * np.sin(2.0 * np.pi * k * i / n)
    return TimeSeries(0.0, dt, v)


def test_pure_tone_selects_one_bin():
    spec, sel = extract(tones((10, 5.0)), 90.0)
    assert sel.m_star == 1
    assert sel.bins == (10,)
    assert sel.angular_freqs[0] == pytest.approx(2.0 * np.pi * 10 / (N * DT))
    assert int(np.argmax(spec.psd)) == 10


def test_spectrum_grid():
    spec = power_spectrum(tones((3, 1.0)))
    assert spec.freqs.shape == (N // 2 + 1,)
    assert spec.freqs[0] == 0.0
    assert spec.freqs[1] == pytest.approx(1.0 / (N * DT))
    assert spec.psd[0] == pytest.approx(0.0, abs=1e-12)


def test_constant_signal_has_no_signal():
    series = TimeSeries(0.0, DT, np.full(64, 2.0))
    with pytest.raises(NoSignal):
        extract(series, 90.0)


def test_two_tones_ordered_by_energy():
    spec, sel = extract(tones((7, 1.0), (25, 2.0)), 70.0)
    assert spec.psd[25] / spec.psd[7] == pytest.approx(4.0, rel=1e-9)
    assert sel.bins == (25,)
    _, sel = extract(tones((7, 1.0), (25, 2.0)), 90.0)
    assert sel.bins == (25, 7)


@pytest.mark.parametrize("n", [256, 257])
def test_parseval(n):
    rng = np.random.Generator(np.random.Philox(3))
    series = TimeSeries(0.0, DT, rng.standard_normal(n) + 1.5)
    x = series.values - series.values.mean()
    assert power_spectrum(series).total_energy() == pytest.approx(n * np.sum(x * x), rel=1e-10)


def test_selection_is_monotone_in_threshold():
    rng = np.random.Generator(np.random.Philox(5))
    series = tones((4, 3.0), (9, 1.0), (40, 0.5))
    series = series.with_values(series.values + 0.3 * rng.standard_normal(N))
    spec = power_spectrum(series)
    counts = [select_dominant_frequencies(spec, p).m_star for p in (10, 50, 80, 90, 95, 99, 99.9)]
    assert counts == sorted(counts)
    assert counts[0] >= 1


def test_threshold_must_be_open_percent():
    spec = power_spectrum(tones((10, 1.0)))
    for p in (0.0, 100.0, -5.0, 150.0):
        with pytest.raises(ContractViolation):
            select_dominant_frequencies(spec, p)


def test_too_short_series():
    with pytest.raises(ContractViolation):
        power_spectrum(TimeSeries(0.0, DT, np.array([1.0, 2.0, 3.0])))


def test_spectrum_validation():
    freqs = np.array([0.0, 0.1, 0.2])
    with pytest.raises(ContractViolation):
        Spectrum(freqs, np.array([1.0, -1.0, 0.0]), 4, DT)
    with pytest.raises(ContractViolation):
        Spectrum(np.array([0.0, 0.2, 0.1]), np.ones(3), 4, DT)


def test_reconstruction_of_a_pure_tone():
    series = tones((12, 4.0))
    _, sel = extract(series, 99.0)
    rebuilt = filtered_reconstruction(series, sel)
    np.testing.assert_allclose(rebuilt.values, series.values, atol=1e-9)


def test_reconstruction_drops_weak_components():
    series = tones((12, 4.0), (50, 0.1))
    _, sel = extract(series, 99.0)
    assert sel.bins == (12,)
    rebuilt = filtered_reconstruction(series, sel)
    np.testing.assert_allclose(rebuilt.values, tones((12, 4.0)).values, atol=1e-9)


def test_reconstruction_rejects_foreign_selection():
    sel = FrequencySelection.from_bins([3], 500, DT)
    with pytest.raises(ContractViolation):
        filtered_reconstruction(tones((3, 1.0)), sel)


def test_selection_record():
    sel = FrequencySelection.from_bins([5, 2], N, DT, threshold=95.0)
    record = sel.as_record()
    assert record["p"] == 95.0
    assert record["m_star"] == 2
    assert record["angular_freqs"][0] == pytest.approx(2.0 * np.pi * 5 / (N * DT))
    with pytest.raises(ContractViolation):
        FrequencySelection(95.0, (), (), N, DT)


# raw energy: the DC bin is ranked and counted

def test_raw_spectrum_keeps_the_mean():
    series = tones((25, 10.0))
    spec = power_spectrum(series, centered=False)
    assert not spec.centered
    assert spec.psd[0] == pytest.approx((N * 40.0) ** 2, rel=1e-12)
    assert spec.psd[25] == pytest.approx((10.0 * N / 2) ** 2, rel=1e-9)


@pytest.mark.parametrize("n", [256, 257])
def test_parseval_raw(n):
    rng = np.random.Generator(np.random.Philox(3))
    series = TimeSeries(0.0, DT, rng.standard_normal(n) + 1.5)
    x = series.values
    assert power_spectrum(series, centered=False).total_energy() == pytest.approx(n * np.sum(x * x), rel=1e-10)


def test_raw_selection_counts_dc():
    series = tones((25, 10.0), (7, 3.0))
    _, sel = extract(series, 99.0, "raw")
    assert sel.dc_selected
    assert sel.bins == (25,)
    assert sel.m_star == 2
    _, sel = extract(series, 99.9, "raw")
    assert sel.bins == (25, 7)
    assert sel.m_star == 3
    assert min(sel.angular_freqs) > 0


def test_raw_selection_never_keeps_dc_alone():
    _, sel = extract(tones((25, 10.0)), 95.0, "raw")
    assert sel.dc_selected
    assert sel.bins == (25,)
    assert sel.m_star == 2
    assert sel.as_record()["dc_selected"] is True


def test_raw_and_centered_agree_without_offset():
    series = tones((10, 5.0), (30, 1.0), offset=0.0)
    _, centered = extract(series, 90.0, "centered")
    _, raw = extract(series, 90.0, "raw")
    assert not raw.dc_selected
    assert raw.bins == centered.bins == (10,)


@pytest.mark.parametrize("p", [50.0, 80.0, 95.0, 99.0, 99.9])
def test_raw_count_exceeds_centered_by_at_most_one(p):
    rng = np.random.Generator(np.random.Philox(11))
    series = tones((4, 3.0), (9, 1.0), (40, 0.5))
    series = series.with_values(series.values + 0.3 * rng.standard_normal(N))
    _, centered = extract(series, p, "centered")
    _, raw = extract(series, p, "raw")
    assert raw.m_star <= centered.m_star + 1


def test_unknown_energy_convention():
    with pytest.raises(ContractViolation):
        extract(tones((3, 1.0)), 90.0, "two-sided")


# counts on the default simulated observations (1% relative noise, seed 0)

DEFAULT_CASES = [
    ("sml", "hopf", 7),
    ("sml", "snic", 8),
    ("sml", "homoclinic", 34),
    ("bml", "square-wave", 109),
    ("bml", "elliptic", 97),
    ("pbc", "pbc-default", 4589),
]

_observed = {}


def default_observations(model_id, regime):
    """Observed voltage as the simulate command writes it with default settings."""
    key = (model_id, regime)
    if key not in _observed:
        doc = default_config(model_id)
        spec = get_model(model_id)
        sim, noise = doc["sim"], doc["noise"]
        traj = simulate(spec, load_preset(regime, model_id), sim["duration"], sim["dt"], sim["stride"])
        clean = traj.series(spec.state_names[spec.observed_index])
        _observed[key] = (doc["fft"]["p"], add_noise(clean, NoiseSpec(noise["kind"], noise["level"], noise["seed"])))
    return _observed[key]


@pytest.mark.slow
@pytest.mark.parametrize("model_id, regime, m_star", DEFAULT_CASES)
def test_centered_counts_on_default_observations(model_id, regime, m_star):
    p, obs = default_observations(model_id, regime)
    _, sel = extract(obs, p, "centered")
    assert sel.m_star == m_star
    assert not sel.dc_selected


@pytest.mark.slow
@pytest.mark.parametrize("model_id, regime, m_star", DEFAULT_CASES)
def test_raw_counts_stay_within_one_of_centered(model_id, regime, m_star):
    p, obs = default_observations(model_id, regime)
    _, raw = extract(obs, p, "raw")
    _, centered = extract(obs, p, "centered")
    assert centered.m_star == m_star
    assert 1 <= raw.m_star <= centered.m_star + 1


@pytest.mark.slow
def test_raw_counts_of_the_sml_hopf_and_bml_square_wave_runs():
    p, obs = default_observations("sml", "hopf")
    assert extract(obs, p, "raw")[1].m_star in (3, 4)
    p, obs = default_observations("bml", "square-wave")
    assert abs(extract(obs, p, "raw")[1].m_star - 19) <= 2


@pytest.mark.slow
def test_simulated_spike_train_needs_more_frequencies_at_higher_threshold():
    sml = get_model("sml")
    traj = simulate(sml, load_preset("hopf"), 1000.0, 0.1, stride=5)
    spec = power_spectrum(traj.series("V"))
    low = select_dominant_frequencies(spec, 50.0).m_star
    high = select_dominant_frequencies(spec, 99.0).m_star
    assert 1 <= low < high


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
