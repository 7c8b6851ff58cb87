"""Pulse construction, spectral encoding, NLSE propagation, detection."""

import csv
import math

import numpy as np
import pytest

from ipcap.errors import NumericalError, PreconditionError
from ipcap.photonic import (
    DetectorConfig,
    EncoderConfig,
    FiberConfig,
    PulseField,
    SCHEME_ALTERNATING_2,
    SCHEME_SEQUENTIAL_5X4,
    average_to_peak_power,
    bin_input_map,
    dbm_to_watts,
    detect,
    encode_inputs,
    make_sech_pulse,
    nonlinear_phase,
    propagate,
    save_spectrum_csv,
    simulate_dataset,
)
from ipcap.sampling import sobol_points

TAU_PS = 4.2 / 1.763

# Fundamental soliton peak power |beta2| / (gamma tau^2) for the default
# fiber, computed from 23 ps^2/km, 1.2 /(W km), tau = 4.2/1.763 ps.
P_SOLITON_W = 3.377167753212396

QUIET = EncoderConfig(instrument_filter_nm=None, phase_noise_std_rad=0.0)


def test_sech_pulse_shape_and_energy():
    pulse = make_sech_pulse(4.0, 4.2)
    power = np.abs(pulse.envelope) ** 2
    center = pulse.n_points // 2
    assert power[center] == pytest.approx(4.0, rel=1e-15)
    assert np.argmax(power) == center
    # analytic sech^2 energy: integral P sech^2(t/tau) dt = 2 P tau
    assert pulse.energy() == pytest.approx(2.0 * 4.0 * TAU_PS, rel=1e-12)
    # FWHM of the power profile
    above = power >= 2.0
    fwhm = np.sum(above) * pulse.dt
    assert fwhm == pytest.approx(4.2, abs=2 * pulse.dt)


def test_sech_pulse_guards():
    with pytest.raises(PreconditionError):
        make_sech_pulse(1.0, 0.0)
    with pytest.raises(PreconditionError):
        make_sech_pulse(-1.0, 4.2)
    # window below 20 tau would wrap the tails around the periodic grid
    with pytest.raises(PreconditionError):
        make_sech_pulse(1.0, 4.2, n_points=2**10, t_window_ps=40.0)


def test_pulse_field_validation():
    with pytest.raises(PreconditionError):
        PulseField(
            envelope=np.ones(100), dt=0.1, t_window=10.0, center_wavelength_nm=1550.0
        )
    with pytest.raises(PreconditionError):
        PulseField(
            envelope=np.ones(128), dt=0.1, t_window=10.0, center_wavelength_nm=1550.0
        )


def test_grids_are_consistent():
    pulse = make_sech_pulse(1.0, 4.2, n_points=2**10, t_window_ps=128.0)
    assert np.all(np.diff(pulse.frequency_grid) > 0)
    assert np.all(np.diff(pulse.wavelength_grid) < 0)
    nu0 = 299792.458 / 1550.0
    np.testing.assert_allclose(
        pulse.wavelength_grid, 299792.458 / (nu0 + pulse.frequency_grid), rtol=1e-15
    )
    assert pulse.time_grid[pulse.n_points // 2] == 0.0


def test_fundamental_soliton_preserves_shape():
    pulse = make_sech_pulse(P_SOLITON_W, 4.2)
    out = propagate(pulse, FiberConfig(length_m=500.0))
    drift = np.max(np.abs(np.abs(out.envelope) - np.abs(pulse.envelope)))
    assert drift < 1e-3 * math.sqrt(P_SOLITON_W)


def test_propagation_conserves_energy_without_loss():
    pulse = make_sech_pulse(20.0, 4.2)
    out = propagate(pulse, FiberConfig(length_m=100.0))
    assert out.energy() == pytest.approx(pulse.energy(), rel=1e-12)


def test_linear_propagation_preserves_spectrum():
    pulse = make_sech_pulse(20.0, 4.2)
    out = propagate(pulse, FiberConfig(length_m=100.0, gamma_per_w_km=0.0))
    spectrum = pulse.spectrum()
    np.testing.assert_allclose(
        out.spectrum(), spectrum, rtol=1e-9, atol=1e-12 * spectrum.max()
    )


def test_loss_scales_energy_exactly():
    pulse = make_sech_pulse(5.0, 4.2)
    out = propagate(
        pulse,
        FiberConfig(length_m=1000.0, gamma_per_w_km=0.0, alpha_per_km=0.2),
    )
    assert out.energy() / pulse.energy() == pytest.approx(math.exp(-0.2), rel=1e-12)


def test_zero_length_is_identity():
    pulse = make_sech_pulse(5.0, 4.2)
    out = propagate(pulse, FiberConfig(length_m=0.0))
    np.testing.assert_array_equal(out.envelope, pulse.envelope)


def test_runaway_gain_raises():
    pulse = make_sech_pulse(1.0, 4.2)
    fiber = FiberConfig(length_m=40.0, gamma_per_w_km=0.0, alpha_per_km=-1e6)
    with np.errstate(over="ignore"), pytest.raises(NumericalError):
        propagate(pulse, fiber)


def test_propagate_rejects_nonfinite_input():
    pulse = make_sech_pulse(1.0, 4.2)
    envelope = np.array(pulse.envelope)
    envelope[0] = np.inf
    with pytest.raises(NumericalError):
        propagate(pulse.replace_envelope(envelope), FiberConfig(length_m=1.0))


def test_bin_input_map_schemes():
    np.testing.assert_array_equal(
        bin_input_map(EncoderConfig(), 2), np.tile([0, 1], 10)
    )
    np.testing.assert_array_equal(
        bin_input_map(EncoderConfig(scheme=SCHEME_SEQUENTIAL_5X4), 5),
        np.tile(np.arange(5), 4),
    )
    custom = EncoderConfig(scheme=(0, 0, 1, 2) * 5)
    np.testing.assert_array_equal(
        bin_input_map(custom, 3), np.array([0, 0, 1, 2] * 5)
    )


def test_bin_input_map_guards():
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(), 3)  # scheme encodes 2 inputs
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(scheme="no-such-scheme"), 2)
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(n_bins=19), 2)  # 19 not divisible by 2
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(scheme=(0, 1)), 2)  # wrong length
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(scheme=(0, 1) * 10), 3)  # input 2 missing
    with pytest.raises(PreconditionError):
        bin_input_map(EncoderConfig(scheme=(0, 5) * 10), 2)  # out of range


def test_encoder_config_guards():
    with pytest.raises(PreconditionError):
        EncoderConfig(span_nm=0.0)
    with pytest.raises(PreconditionError):
        EncoderConfig(n_bins=0)
    with pytest.raises(PreconditionError):
        EncoderConfig(instrument_filter_nm=-0.1)
    with pytest.raises(PreconditionError):
        EncoderConfig(phase_noise_std_rad=-1.0)


def test_encode_input_guards():
    pulse = make_sech_pulse(1.0, 4.2)
    with pytest.raises(PreconditionError):
        encode_inputs(pulse, [1.5, 0.0], QUIET)
    with pytest.raises(PreconditionError):
        encode_inputs(pulse, [[0.5, 0.0]], QUIET)


def test_encode_mask_values_on_bins():
    # Without filter or phase noise the encoded spectrum is the original
    # times sign(u) sqrt(|u|) on each input's bins, untouched outside.
    pulse = make_sech_pulse(2.0, 4.2)
    u = np.array([-1.0, 0.25])
    encoded = encode_inputs(pulse, u, QUIET)
    before = np.fft.fftshift(np.fft.fft(pulse.envelope))
    after = np.fft.fftshift(np.fft.fft(encoded.envelope))
    lam = pulse.wavelength_grid
    lo = 1550.0 - 1.25
    bins = np.floor((lam - lo) / (2.5 / 20)).astype(int)
    in_span = (bins >= 0) & (bins < 20)
    values = np.sign(u) * np.sqrt(np.abs(u))
    expected = np.where(in_span, values[bins % 2], 1.0)
    np.testing.assert_allclose(after, before * expected, atol=1e-9)


def test_encode_all_ones_is_identity():
    # u = (1, 1) gives a mask of one everywhere, which the flattop
    # convolution leaves untouched; the pulse passes through unchanged.
    pulse = make_sech_pulse(2.0, 4.2)
    cfg = EncoderConfig(phase_noise_std_rad=0.0)
    encoded = encode_inputs(pulse, [1.0, 1.0], cfg)
    np.testing.assert_allclose(encoded.envelope, pulse.envelope, atol=1e-12)


def test_encode_determinism():
    pulse = make_sech_pulse(2.0, 4.2)
    cfg = EncoderConfig()  # default phase noise
    a = encode_inputs(pulse, [0.5, -0.5], cfg, seed=7)
    b = encode_inputs(pulse, [0.5, -0.5], cfg, seed=7)
    c = encode_inputs(pulse, [0.5, -0.5], cfg, seed=8)
    np.testing.assert_array_equal(a.envelope, b.envelope)
    assert np.any(a.envelope != c.envelope)
    # with zero phase noise the seed is irrelevant
    d = encode_inputs(pulse, [0.5, -0.5], QUIET, seed=7)
    e = encode_inputs(pulse, [0.5, -0.5], QUIET, seed=8)
    np.testing.assert_array_equal(d.envelope, e.envelope)


def test_detect_shape_and_center_peak():
    pulse = make_sech_pulse(5.0, 4.2)
    readouts = detect(pulse, DetectorConfig())
    assert readouts.shape == (71,)
    assert np.all(readouts >= 0)
    # unmodulated sech spectrum peaks at the carrier, readout 35
    assert np.argmax(readouts) == 35


def test_detect_resolution_guard():
    pulse = make_sech_pulse(1.0, 4.2)  # 256 ps window: grid ~0.031 nm
    fine = DetectorConfig(resolution_nm=0.02, n_readouts=176)
    with pytest.raises(PreconditionError):
        detect(pulse, fine)
    # a longer window refines the spectral grid below 0.02 nm
    long_pulse = make_sech_pulse(1.0, 4.2, n_points=2**15, t_window_ps=512.0)
    assert detect(long_pulse, fine).shape == (176,)


def test_detector_config_validation():
    with pytest.raises(PreconditionError):
        DetectorConfig(n_readouts=70)
    with pytest.raises(PreconditionError):
        DetectorConfig(span_nm=-1.0)


def test_fiber_config_validation():
    with pytest.raises(PreconditionError):
        FiberConfig(length_m=-1.0)
    with pytest.raises(PreconditionError):
        FiberConfig(length_m=1.0, max_phase_per_step_rad=0.0)


def test_nonlinear_phase():
    assert nonlinear_phase(1.2, 61.0, 40.0) == pytest.approx(2.928, rel=1e-12)
    assert nonlinear_phase(1.2, 61.0, 5.0) == pytest.approx(0.366, rel=1e-12)
    with pytest.raises(PreconditionError):
        nonlinear_phase(-1.0, 1.0, 1.0)


def test_power_conversions():
    assert dbm_to_watts(0.0) == pytest.approx(1e-3, rel=1e-15)
    assert dbm_to_watts(30.0) == pytest.approx(1.0, rel=1e-15)
    # 7.1 dBm average, 10 MHz sech train, 4.2 ps FWHM
    assert average_to_peak_power(7.1) == pytest.approx(
        107.63983571152099, rel=1e-12
    )
    assert average_to_peak_power(10.0) > average_to_peak_power(7.1)


def test_simulate_dataset_round_trip():
    samples = sobol_points(2, 4)
    fiber = FiberConfig(length_m=5.0)
    data = simulate_dataset(samples, EncoderConfig(), fiber, DetectorConfig(), 7.1)
    assert data.readouts.shape == (4, 71)
    np.testing.assert_array_equal(data.inputs, samples.points)
    assert data.meta["fiber_length_m"] == 5.0
    assert data.meta["power_dbm"] == 7.1
    assert data.meta["p_peak_w"] == pytest.approx(107.63983571152099, rel=1e-12)
    assert data.meta["phi_nl_rad"] == pytest.approx(
        nonlinear_phase(1.2, data.meta["p_peak_w"], 5.0), rel=1e-12
    )
    assert data.meta["sampling_source"] == "sobol"
    assert data.meta["simulation_seed"] == 0

    again = simulate_dataset(samples, EncoderConfig(), fiber, DetectorConfig(), 7.1)
    np.testing.assert_array_equal(again.readouts, data.readouts)
    other = simulate_dataset(
        samples, EncoderConfig(), fiber, DetectorConfig(), 7.1, seed=1
    )
    assert np.any(other.readouts != data.readouts)


def test_simulate_dataset_jobs_equivalence():
    samples = sobol_points(2, 4)
    fiber = FiberConfig(length_m=5.0)
    one = simulate_dataset(samples, EncoderConfig(), fiber, DetectorConfig(), 7.1)
    two = simulate_dataset(
        samples, EncoderConfig(), fiber, DetectorConfig(), 7.1, jobs=2
    )
    np.testing.assert_array_equal(one.readouts, two.readouts)


def test_save_spectrum_csv(tmp_path):
    pulse = make_sech_pulse(1.0, 4.2, n_points=2**10, t_window_ps=128.0)
    path = tmp_path / "spectrum.csv"
    save_spectrum_csv(pulse, str(path))
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["wavelength_nm", "power"]
    assert len(rows) == 1 + pulse.n_points
    wavelengths = np.array([float(r[0]) for r in rows[1:]])
    assert np.all(np.diff(wavelengths) > 0)
