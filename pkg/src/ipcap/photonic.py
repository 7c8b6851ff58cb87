"""Photonic extreme learning machine: pulse, encoder, fiber, spectrometer.

A sech laser pulse is shaped by a programmable spectral filter that
encodes the inputs as amplitude/phase masks on 20 wavelength bins,
propagates through a nonlinear fiber (split-step Fourier integration of
the NLSE), and is read out as 71 point samples of the output power
spectrum. Everything is deterministic given the configs and a seed.
"""

from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .capacity import Dataset
from .errors import NumericalError, PreconditionError
from .sampling import SampleMatrix

__all__ = [
    "PulseField",
    "EncoderConfig",
    "FiberConfig",
    "DetectorConfig",
    "SCHEME_ALTERNATING_2",
    "SCHEME_SEQUENTIAL_5X4",
    "make_sech_pulse",
    "bin_input_map",
    "encode_inputs",
    "propagate",
    "detect",
    "simulate_dataset",
    "nonlinear_phase",
    "dbm_to_watts",
    "average_to_peak_power",
    "save_spectrum_csv",
]

logger = logging.getLogger(__name__)

SPEED_OF_LIGHT_NM_PS = 299792.458

# FWHM of sech^2 intensity in units of tau: 2*arccosh(sqrt(2)).
FWHM_PER_TAU = 1.763

DEFAULT_CENTER_WAVELENGTH_NM = 1550.0
DEFAULT_GRID_POINTS = 2**14
DEFAULT_TIME_WINDOW_PS = 256.0
DEFAULT_TAU_FWHM_PS = 4.2
DEFAULT_REPETITION_RATE_HZ = 10e6

SCHEME_ALTERNATING_2 = "alternating-2"
SCHEME_SEQUENTIAL_5X4 = "sequential-5x4"

DEFAULT_PHASE_NOISE_STD_RAD = 0.15e-2 * 2.0 * math.pi


@dataclass(frozen=True)
class PulseField:
    """Complex envelope on a uniform time grid (carrier factored out)."""

    envelope: np.ndarray = field(repr=False)
    dt: float
    t_window: float
    center_wavelength_nm: float

    def __post_init__(self) -> None:
        env = np.asarray(self.envelope, dtype=np.complex128)
        n = env.shape[0]
        if env.ndim != 1 or n < 2 or n & (n - 1):
            raise PreconditionError(
                f"envelope length must be a power of two >= 2, got shape {env.shape}"
            )
        if self.dt <= 0 or self.t_window <= 0:
            raise PreconditionError("dt and t_window must be positive")
        if abs(self.dt * n - self.t_window) > 1e-9 * self.t_window:
            raise PreconditionError(
                f"t_window {self.t_window} != n_points * dt = {self.dt * n}"
            )
        env = env.copy()
        env.setflags(write=False)
        object.__setattr__(self, "envelope", env)

    @property
    def n_points(self) -> int:
        return self.envelope.shape[0]

    @cached_property
    def time_grid(self) -> np.ndarray:
        # Centered grid; t = 0 sits at index n/2.
        t = (np.arange(self.n_points) - self.n_points // 2) * self.dt
        t.setflags(write=False)
        return t

    @cached_property
    def frequency_grid(self) -> np.ndarray:
        """Offsets from the carrier in 1/ps, monotonically increasing."""
        nu = np.fft.fftshift(np.fft.fftfreq(self.n_points, d=self.dt))
        nu.setflags(write=False)
        return nu

    @cached_property
    def wavelength_grid(self) -> np.ndarray:
        """Wavelength (nm) per spectral sample, monotonically decreasing."""
        nu0 = SPEED_OF_LIGHT_NM_PS / self.center_wavelength_nm
        lam = SPEED_OF_LIGHT_NM_PS / (nu0 + self.frequency_grid)
        lam.setflags(write=False)
        return lam

    def energy(self) -> float:
        """Pulse energy in pJ (W * ps) on the grid."""
        return float(np.sum(np.abs(self.envelope) ** 2) * self.dt)

    def spectrum(self) -> np.ndarray:
        """Spectral power density |A~(nu)|^2 on frequency_grid (W * ps^2)."""
        a_tilde = np.fft.fftshift(np.fft.fft(self.envelope)) * self.dt
        return np.abs(a_tilde) ** 2

    def replace_envelope(self, envelope: np.ndarray) -> "PulseField":
        return PulseField(
            envelope=envelope,
            dt=self.dt,
            t_window=self.t_window,
            center_wavelength_nm=self.center_wavelength_nm,
        )


@dataclass(frozen=True)
class EncoderConfig:
    """Programmable spectral filter: bins, input layout, imperfections."""

    span_nm: float = 2.5
    n_bins: int = 20
    scheme: str | tuple[int, ...] = SCHEME_ALTERNATING_2
    instrument_filter_nm: float | None = 0.08
    phase_noise_std_rad: float = DEFAULT_PHASE_NOISE_STD_RAD

    def __post_init__(self) -> None:
        if self.span_nm <= 0:
            raise PreconditionError(f"span_nm must be > 0, got {self.span_nm}")
        if self.n_bins < 1:
            raise PreconditionError(f"n_bins must be >= 1, got {self.n_bins}")
        if self.instrument_filter_nm is not None and self.instrument_filter_nm < 0:
            raise PreconditionError("instrument_filter_nm must be >= 0 or None")
        if self.phase_noise_std_rad < 0:
            raise PreconditionError("phase_noise_std_rad must be >= 0")
        if not isinstance(self.scheme, str):
            object.__setattr__(self, "scheme", tuple(int(b) for b in self.scheme))


@dataclass(frozen=True)
class FiberConfig:
    """NLSE parameters; lengths in m, beta2/gamma/alpha per km."""

    length_m: float
    beta2_ps2_km: float = -23.0
    gamma_per_w_km: float = 1.2
    alpha_per_km: float = 0.0
    max_phase_per_step_rad: float = 0.05

    def __post_init__(self) -> None:
        if self.length_m < 0:
            raise PreconditionError(f"length_m must be >= 0, got {self.length_m}")
        if self.max_phase_per_step_rad <= 0:
            raise PreconditionError("max_phase_per_step_rad must be > 0")


@dataclass(frozen=True)
class DetectorConfig:
    """OSA-style point sampling of the power spectrum."""

    span_nm: float = 3.5
    resolution_nm: float = 0.05
    n_readouts: int = 71

    def __post_init__(self) -> None:
        if self.span_nm <= 0 or self.resolution_nm <= 0:
            raise PreconditionError("span_nm and resolution_nm must be > 0")
        expected = self.span_nm / self.resolution_nm + 1.0
        if abs(expected - self.n_readouts) > 1e-9:
            raise PreconditionError(
                f"n_readouts must equal span/resolution + 1 = {expected}, got {self.n_readouts}"
            )


def make_sech_pulse(
    p_peak_w: float,
    tau_fwhm_ps: float,
    n_points: int = DEFAULT_GRID_POINTS,
    t_window_ps: float = DEFAULT_TIME_WINDOW_PS,
    center_wavelength_nm: float = DEFAULT_CENTER_WAVELENGTH_NM,
) -> PulseField:
    """A(t) = sqrt(P_peak) * sech(t / tau), tau = FWHM / 1.763."""
    if tau_fwhm_ps <= 0:
        raise PreconditionError(f"tau_fwhm_ps must be > 0, got {tau_fwhm_ps}")
    if p_peak_w < 0:
        raise PreconditionError(f"p_peak_w must be >= 0, got {p_peak_w}")
    tau = tau_fwhm_ps / FWHM_PER_TAU
    if t_window_ps < 20.0 * tau:
        raise PreconditionError(
            f"t_window_ps = {t_window_ps} ps is below 20 tau = {20.0 * tau:.3f} ps; "
            "the pulse would wrap around the periodic grid"
        )
    dt = t_window_ps / n_points
    t = (np.arange(n_points) - n_points // 2) * dt
    envelope = np.sqrt(p_peak_w) / np.cosh(t / tau)
    return PulseField(
        envelope=envelope.astype(np.complex128),
        dt=dt,
        t_window=t_window_ps,
        center_wavelength_nm=center_wavelength_nm,
    )


def bin_input_map(cfg: EncoderConfig, q: int) -> np.ndarray:
    """Input index carried by each encoder bin, as an (n_bins,) array."""
    if isinstance(cfg.scheme, str):
        expected_q = {SCHEME_ALTERNATING_2: 2, SCHEME_SEQUENTIAL_5X4: 5}.get(
            cfg.scheme
        )
        if expected_q is None:
            raise PreconditionError(f"unknown encoding scheme {cfg.scheme!r}")
        if q != expected_q:
            raise PreconditionError(
                f"scheme {cfg.scheme!r} encodes {expected_q} inputs, got q={q}"
            )
        if cfg.n_bins % q:
            raise PreconditionError(
                f"n_bins = {cfg.n_bins} not divisible by {q} inputs"
            )
        return np.arange(cfg.n_bins) % q
    mapping = np.asarray(cfg.scheme, dtype=np.int64)
    if mapping.shape != (cfg.n_bins,):
        raise PreconditionError(
            f"custom scheme must list one input per bin ({cfg.n_bins}), got {mapping.shape}"
        )
    if mapping.min() < 0 or mapping.max() >= q:
        raise PreconditionError(f"custom scheme references inputs outside 0..{q - 1}")
    missing = sorted(set(range(q)) - set(mapping.tolist()))
    if missing:
        raise PreconditionError(f"custom scheme never encodes input(s) {missing}")
    return mapping


def _mask_on_grid(
    field: PulseField, u: np.ndarray, cfg: EncoderConfig, rng: np.random.Generator | None
) -> np.ndarray:
    """Complex mask per spectral sample (fftshift order), 1 outside the span."""
    bin_values = np.sign(u) * np.sqrt(np.abs(u))
    mapping = bin_input_map(cfg, u.shape[0])
    per_bin = bin_values[mapping].astype(np.complex128)
    if cfg.phase_noise_std_rad > 0 and rng is not None:
        per_bin *= np.exp(1j * rng.normal(0.0, cfg.phase_noise_std_rad, cfg.n_bins))
    lam = field.wavelength_grid
    lo = field.center_wavelength_nm - cfg.span_nm / 2.0
    bin_width = cfg.span_nm / cfg.n_bins
    bins = np.floor((lam - lo) / bin_width).astype(np.int64)
    in_span = (bins >= 0) & (bins < cfg.n_bins)
    # The shaper only attenuates the band it addresses; spectral wings
    # outside the span pass through and later seed the Kerr mixing that
    # makes a global sign flip of the encoded band observable.
    mask = np.ones(field.n_points, dtype=np.complex128)
    mask[in_span] = per_bin[bins[in_span]]
    if cfg.instrument_filter_nm:
        # Flattop response: boxcar of the given width, normalized, applied
        # on the uniform frequency axis.
        d_nu = 1.0 / field.t_window
        width_nu = (
            SPEED_OF_LIGHT_NM_PS
            * cfg.instrument_filter_nm
            / field.center_wavelength_nm**2
        )
        m = max(1, int(round(width_nu / d_nu)))
        if m > 1:
            kernel = np.full(m, 1.0 / m)
            mask = np.convolve(mask, kernel, mode="same")
    return mask


def encode_inputs(
    field: PulseField,
    u,
    cfg: EncoderConfig,
    seed: int | None = None,
) -> PulseField:
    """Multiply the spectral field by the mask sign(u) * sqrt(|u|).

    Per-bin phase noise (when configured and a seed is given) is applied
    before the instrument-filter convolution. Outside the encoded span
    the mask is 1: the shaper attenuates only the band it addresses, so
    the pulse's spectral wings pass through unchanged.
    """
    u = np.asarray(u, dtype=np.float64)
    if u.ndim != 1 or u.size < 1:
        raise PreconditionError(f"u must be a 1-d input vector, got shape {u.shape}")
    if np.any(np.abs(u) > 1.0):
        raise PreconditionError("inputs must lie in [-1, 1]")
    rng = None
    if cfg.phase_noise_std_rad > 0:
        rng = np.random.default_rng(seed)
    mask = _mask_on_grid(field, u, cfg, rng)
    a_tilde = np.fft.fftshift(np.fft.fft(field.envelope))
    encoded = np.fft.ifft(np.fft.ifftshift(a_tilde * mask))
    return field.replace_envelope(encoded)


def propagate(field: PulseField, fiber: FiberConfig) -> PulseField:
    """Symmetric split-step Fourier integration of the NLSE.

    dA/dz = -(alpha/2) A - i (beta2/2) d^2A/dt^2 + i gamma |A|^2 A,
    the anomalous-dispersion convention in which beta2 < 0 supports
    bright solitons with peak power |beta2| / (gamma tau^2).
    The step size keeps the nonlinear phase per step below
    max_phase_per_step_rad; with alpha = 0 the integrator conserves
    energy to round-off.
    """
    if not np.all(np.isfinite(field.envelope)):
        raise NumericalError("input field contains non-finite samples")
    if fiber.length_m == 0:
        return field
    beta2 = fiber.beta2_ps2_km * 1e-3  # ps^2/m
    gamma = fiber.gamma_per_w_km * 1e-3  # 1/(W m)
    alpha = fiber.alpha_per_km * 1e-3  # 1/m
    omega = 2.0 * np.pi * np.fft.fftfreq(field.n_points, d=field.dt)
    a = np.array(field.envelope, dtype=np.complex128)
    z = 0.0
    length = float(fiber.length_m)
    while z < length * (1.0 - 1e-12):
        p_max = float(np.max(np.abs(a) ** 2))
        dz = length - z
        if gamma > 0 and p_max > 0:
            dz = min(dz, fiber.max_phase_per_step_rad / (gamma * p_max))
        half = np.exp((-alpha / 2.0 + 1j * (beta2 / 2.0) * omega**2) * (dz / 2.0))
        a = np.fft.ifft(np.fft.fft(a) * half)
        a *= np.exp(1j * gamma * np.abs(a) ** 2 * dz)
        a = np.fft.ifft(np.fft.fft(a) * half)
        z += dz
        if not np.all(np.isfinite(a)):
            raise NumericalError(
                f"field became non-finite at z = {z:.3f} m (of {length} m); "
                "reduce step phase budget or input power"
            )
    return field.replace_envelope(a)


def detect(field: PulseField, det: DetectorConfig | None = None) -> np.ndarray:
    """Power spectrum point-sampled at the detector's wavelength comb.

    Linear interpolation of |A~|^2 at n_readouts points spaced
    resolution_nm apart, centered on the carrier.
    """
    det = det or DetectorConfig()
    lam = field.wavelength_grid
    # Grid spacing in wavelength near the carrier must resolve the comb.
    d_lam = field.center_wavelength_nm**2 / (
        SPEED_OF_LIGHT_NM_PS * field.t_window
    )
    if d_lam > det.resolution_nm:
        raise PreconditionError(
            f"spectral grid spacing {d_lam:.4f} nm is coarser than the "
            f"detector resolution {det.resolution_nm} nm; enlarge t_window"
        )
    half = det.span_nm / 2.0
    targets = field.center_wavelength_nm + np.linspace(-half, half, det.n_readouts)
    power = field.spectrum()
    order = np.argsort(lam)
    return np.interp(targets, lam[order], power[order])


def nonlinear_phase(gamma_per_w_km: float, p_peak_w: float, length_m: float) -> float:
    """phi_NL = gamma * P_peak * L, with L converted from m to km."""
    if gamma_per_w_km < 0 or p_peak_w < 0 or length_m < 0:
        raise PreconditionError("nonlinear_phase arguments must be non-negative")
    return gamma_per_w_km * p_peak_w * length_m * 1e-3


def dbm_to_watts(power_dbm: float) -> float:
    """P[W] = 10^(dBm/10) / 1000."""
    return 10.0 ** (power_dbm / 10.0) / 1000.0


def average_to_peak_power(
    power_dbm: float,
    tau_fwhm_ps: float = DEFAULT_TAU_FWHM_PS,
    repetition_rate_hz: float = DEFAULT_REPETITION_RATE_HZ,
) -> float:
    """Peak power of a sech pulse train with the given average power.

    Sech pulse energy is 2 * P_peak * tau, so
    P_peak = P_avg / (f_rep * 2 * tau).
    """
    tau_s = tau_fwhm_ps / FWHM_PER_TAU * 1e-12
    return dbm_to_watts(power_dbm) / (repetition_rate_hz * 2.0 * tau_s)


def _simulate_chunk(args) -> np.ndarray:
    # Pipeline for a block of samples; module-level for worker processes.
    (points, enc, fiber, det, p_peak, tau_fwhm_ps, n_points, t_window_ps,
     center_wavelength_nm, encode_seeds) = args
    pulse = make_sech_pulse(
        p_peak, tau_fwhm_ps, n_points, t_window_ps, center_wavelength_nm
    )
    readouts = np.empty((points.shape[0], det.n_readouts))
    for i, u in enumerate(points):
        encoded = encode_inputs(pulse, u, enc, seed=int(encode_seeds[i]))
        readouts[i] = detect(propagate(encoded, fiber), det)
    return readouts


def simulate_dataset(
    samples: SampleMatrix,
    enc: EncoderConfig,
    fiber: FiberConfig,
    det: DetectorConfig,
    power_dbm: float,
    tau_fwhm_ps: float = DEFAULT_TAU_FWHM_PS,
    n_points: int = DEFAULT_GRID_POINTS,
    t_window_ps: float = DEFAULT_TIME_WINDOW_PS,
    center_wavelength_nm: float = DEFAULT_CENTER_WAVELENGTH_NM,
    repetition_rate_hz: float = DEFAULT_REPETITION_RATE_HZ,
    seed: int = 0,
    jobs: int = 1,
) -> Dataset:
    """Run every input sample through encode -> propagate -> detect.

    Samples are independent; jobs > 1 spreads contiguous blocks over
    processes without changing the result (per-sample encode seeds are
    preassigned and rows keep sample order).
    """
    p_peak = average_to_peak_power(power_dbm, tau_fwhm_ps, repetition_rate_hz)
    rng = np.random.default_rng(seed)
    encode_seeds = rng.integers(2**62, size=samples.n_samples)
    blocks = max(1, min(jobs, samples.n_samples))
    bounds = np.linspace(0, samples.n_samples, blocks + 1).astype(int)
    work = [
        (
            samples.points[lo:hi],
            enc,
            fiber,
            det,
            p_peak,
            tau_fwhm_ps,
            n_points,
            t_window_ps,
            center_wavelength_nm,
            encode_seeds[lo:hi],
        )
        for lo, hi in zip(bounds[:-1], bounds[1:])
        if hi > lo
    ]
    if blocks > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=blocks) as pool:
            chunks = list(pool.map(_simulate_chunk, work))
    else:
        chunks = [_simulate_chunk(args) for args in work]
    readouts = np.concatenate(chunks, axis=0)
    phi_nl = nonlinear_phase(fiber.gamma_per_w_km, p_peak, fiber.length_m)
    logger.info(
        "simulated %d samples: P_peak = %.3f W, phi_NL = %.3f rad",
        samples.n_samples,
        p_peak,
        phi_nl,
    )
    meta = {
        "sampling_source": samples.source,
        "ordered": samples.ordered,
        "sample_seed": samples.seed,
        "power_dbm": power_dbm,
        "p_peak_w": p_peak,
        "phi_nl_rad": phi_nl,
        "fiber_length_m": fiber.length_m,
        "encoder_scheme": enc.scheme if isinstance(enc.scheme, str) else list(enc.scheme),
        "simulation_seed": seed,
    }
    return Dataset(
        inputs=samples.points, readouts=readouts, augmented=False, meta=meta
    )


def save_spectrum_csv(field: PulseField, path: str) -> None:
    """Dump (wavelength_nm, power) rows for debugging one pulse."""
    lam = field.wavelength_grid
    power = field.spectrum()
    order = np.argsort(lam)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["wavelength_nm", "power"])
        for i in order:
            writer.writerow([f"{lam[i]:.9f}", f"{power[i]:.17g}"])
