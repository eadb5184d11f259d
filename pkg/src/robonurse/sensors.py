"""Vitals sensing models: ratio-metric SpO2, PPG heart rate, thermistor chain.

Forward operations convert raw signals into vitals; the synthesize_* helpers
invert them so the simulator can generate raw signals from latent truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

# Molar absorptivity of oxygenated hemoglobin, L/(mol*cm):
# red light (660 nm) and infrared (940 nm).
EPS_RED = 1.5e4
EPS_IR = 8.83e3

PPG_SAMPLE_RATE = 100.0   # Hz
PPG_WINDOW_S = 5.0        # measurement window per checkup
PEAK_THRESHOLD_FRAC = 0.6
PEAK_REFRACTORY_S = 0.25


class SignalError(ValueError):
    """Raw signal is unusable (bad denominator, no pulse, malformed frame)."""


class OutOfRangeError(ValueError):
    """Input outside the sensor's valid domain."""


@dataclass(frozen=True)
class PpgFrame:
    """Scalar AC/DC light-intensity components reported by the pulse oximeter."""

    ac_red: float
    dc_red: float
    ac_ir: float
    dc_ir: float

    def __post_init__(self):
        if self.dc_red <= 0 or self.dc_ir <= 0:
            raise SignalError("DC components must be positive")
        if self.ac_red < 0 or self.ac_ir < 0:
            raise SignalError("AC components must be non-negative")
        if self.ac_red >= self.dc_red or self.ac_ir >= self.dc_ir:
            raise SignalError("AC component must stay below DC")


@dataclass(frozen=True)
class OpticalConstants:
    eps_red: float = EPS_RED
    eps_ir: float = EPS_IR
    path_depth: float = 1.0  # cm; cancels in the ratio but kept explicit

    def __post_init__(self):
        if min(self.eps_red, self.eps_ir, self.path_depth) <= 0:
            raise OutOfRangeError("optical constants must be positive")


@dataclass(frozen=True)
class ThermistorConfig:
    """10 kOhm NTC divider with Steinhart-Hart coefficients (1/K terms)."""

    r_series: float = 10_000.0
    c1: float = 1.009249522e-3
    c2: float = 2.378405444e-4
    c3: float = 2.019202697e-7
    adc_max: int = 1023

    def __post_init__(self):
        if self.r_series <= 0:
            raise OutOfRangeError("reference resistance must be positive")
        if self.adc_max != 1023:
            raise OutOfRangeError("10-bit ADC expected (adc_max 1023)")
        for c in (self.c1, self.c2, self.c3):
            if not math.isfinite(c):
                raise OutOfRangeError("non-finite Steinhart-Hart coefficient")


@dataclass(frozen=True)
class VitalSigns:
    """One patient measurement."""

    heart_rate: float  # BPM
    spo2: float        # percent
    temp_f: float      # Fahrenheit
    timestamp: float   # seconds since scenario start

    def __post_init__(self):
        if not 0 < self.spo2 <= 100:
            raise OutOfRangeError(f"spo2 {self.spo2} outside (0, 100]")
        if self.heart_rate <= 0:
            raise OutOfRangeError("heart rate must be positive")
        if not math.isfinite(self.temp_f):
            raise OutOfRangeError("temperature must be finite")


def spo2_from_frames(frame: PpgFrame, constants: OpticalConstants = OpticalConstants()) -> float:
    """Oxygen saturation (%) from the red/IR AC components.

    100 * (eps_red*l*AC_red) / (eps_ir*l*AC_ir + eps_red*l*AC_red); the path
    length l cancels but is carried to match the measurement model.
    """
    l = constants.path_depth
    red = constants.eps_red * l * frame.ac_red
    denominator = constants.eps_ir * l * frame.ac_ir + red
    if denominator <= 0:
        raise SignalError("ratio denominator must be positive")
    return 100.0 * red / denominator


def heart_rate_from_period(period_s: float) -> float:
    """Heart rate in BPM from the AC signal period: 60 / T."""
    if period_s <= 0:
        raise SignalError(f"period {period_s} must be positive")
    return 60.0 / period_s


def detect_ac_period(signal, sample_rate: float) -> float:
    """Mean inter-peak interval of a pulsatile waveform, in seconds.

    Peaks are upward crossings of a threshold at 60% of the window's
    peak-to-peak amplitude, with a 0.25 s refractory window.
    """
    if sample_rate < 50:
        raise SignalError(f"sample rate {sample_rate} Hz below 50 Hz minimum")
    x = np.asarray(signal, dtype=float)
    if x.size < 3 * sample_rate:
        raise SignalError("need at least 3 s of signal")
    lo, hi = float(x.min()), float(x.max())
    if hi - lo <= 1e-12:
        raise SignalError("no pulse: flat signal")
    threshold = lo + PEAK_THRESHOLD_FRAC * (hi - lo)
    above = x >= threshold
    crossings = np.flatnonzero(~above[:-1] & above[1:]) + 1
    peaks = []
    last_t = -math.inf
    for idx in crossings:
        t = idx / sample_rate
        if t - last_t >= PEAK_REFRACTORY_S:
            peaks.append(t)
            last_t = t
    if len(peaks) < 2:
        raise SignalError("no pulse: fewer than 2 peaks detected")
    return float(np.mean(np.diff(peaks)))


def thermistor_resistance(v_adc: float, cfg: ThermistorConfig = ThermistorConfig()) -> float:
    """Thermistor resistance from the ADC reading via the voltage divider."""
    if not 0 < v_adc < cfg.adc_max:
        raise OutOfRangeError(f"ADC reading {v_adc} outside (0, {cfg.adc_max})")
    return cfg.r_series * (cfg.adc_max / v_adc - 1.0)


def steinhart_kelvin(r2: float, cfg: ThermistorConfig = ThermistorConfig()) -> float:
    """Steinhart-Hart temperature in Kelvin: 1/(c1 + c2*ln R + c3*ln^3 R)."""
    if r2 <= 0:
        raise OutOfRangeError("resistance must be positive")
    log_r = math.log(r2)
    denominator = cfg.c1 + cfg.c2 * log_r + cfg.c3 * log_r**3
    if denominator <= 0:
        raise OutOfRangeError("coefficients give non-physical temperature")
    return 1.0 / denominator


def kelvin_to_fahrenheit(t_k: float, mode: str = "corrected") -> float:
    """Kelvin to Fahrenheit.

    'corrected' applies the standard conversion; 'literal' reproduces the
    source formula T_F = T_k*9/5 + 32, which omits the 273.15 offset.
    """
    if t_k <= 0:
        raise OutOfRangeError("absolute temperature must be positive")
    if mode == "literal":
        return t_k * 9.0 / 5.0 + 32.0
    if mode == "corrected":
        return (t_k - 273.15) * 9.0 / 5.0 + 32.0
    raise ValueError(f"unknown conversion mode {mode!r}")


def temperature_from_adc(
    v_adc: float, cfg: ThermistorConfig = ThermistorConfig(), mode: str = "corrected"
) -> float:
    """Full thermistor chain: ADC count -> resistance -> Kelvin -> Fahrenheit."""
    return kelvin_to_fahrenheit(steinhart_kelvin(thermistor_resistance(v_adc, cfg), cfg), mode)


@dataclass(frozen=True)
class PpgCapture:
    """A synthesized pulse-oximeter capture: waveforms plus the reported frame."""

    sample_rate: float
    red: np.ndarray
    ir: np.ndarray
    frame: PpgFrame


def synthesize_ppg(
    truth: VitalSigns,
    noise_level: float = 0.0,
    seed: int = 0,
    duration_s: float = PPG_WINDOW_S,
    sample_rate: float = PPG_SAMPLE_RATE,
    constants: OpticalConstants = OpticalConstants(),
) -> PpgCapture:
    """Generate a PPG capture whose AC ratio and period invert the vitals.

    The reported frame's AC components satisfy the saturation ratio exactly
    up to the noise perturbation; the sampled waveforms carry the pulse at
    the target heart rate for period detection. Deterministic given seed.
    """
    if not 0 < truth.spo2 <= 100:
        raise SignalError(f"target spo2 {truth.spo2} outside (0, 100]")
    if not 0 <= noise_level < 0.2:
        raise SignalError(f"noise level {noise_level} outside [0, 0.2)")
    rng = np.random.default_rng(seed)

    s = truth.spo2 / 100.0
    scale = 1e-4  # ADC-unit scaling; cancels in the ratio
    ac_red = s * constants.eps_ir * scale
    ac_ir = (1.0 - s) * constants.eps_red * scale
    ac_red_reported = ac_red * (1.0 + noise_level * rng.uniform(-1.0, 1.0))
    ac_ir_reported = ac_ir * (1.0 + noise_level * rng.uniform(-1.0, 1.0))

    n = int(round(duration_s * sample_rate))
    t = np.arange(n) / sample_rate
    f = truth.heart_rate / 60.0
    dc = 4.0
    red = dc + 0.5 * ac_red * np.sin(2 * np.pi * f * t)
    ir = dc + 0.5 * ac_ir * np.sin(2 * np.pi * f * t)
    if noise_level > 0:
        red = red + noise_level * ac_red * rng.uniform(-1.0, 1.0, n)
        ir = ir + noise_level * ac_ir * rng.uniform(-1.0, 1.0, n)

    frame = PpgFrame(ac_red=ac_red_reported, dc_red=dc, ac_ir=ac_ir_reported, dc_ir=dc)
    return PpgCapture(sample_rate=sample_rate, red=red, ir=ir, frame=frame)


def measure_ppg(capture: PpgCapture, constants: OpticalConstants = OpticalConstants()):
    """Run the forward pipeline on a capture: (heart_rate BPM, spo2 %)."""
    period = detect_ac_period(capture.red, capture.sample_rate)
    return heart_rate_from_period(period), spo2_from_frames(capture.frame, constants)


def synthesize_thermistor(temp_f_true: float, cfg: ThermistorConfig = ThermistorConfig()) -> float:
    """ADC count (fractional) whose corrected-mode pipeline output is temp_f_true.

    Valid for 0-70 degC (32-158 degF), the coefficient calibration range.
    """
    t_c = (temp_f_true - 32.0) * 5.0 / 9.0
    if not 0.0 <= t_c <= 70.0:
        raise OutOfRangeError(f"temperature {temp_f_true} F outside 32-158 F range")
    t_k = t_c + 273.15
    target = 1.0 / t_k

    def invariant(log_r):
        return cfg.c1 + cfg.c2 * log_r + cfg.c3 * log_r**3 - target

    log_r = brentq(invariant, -5.0, 25.0, xtol=1e-13)
    r2 = math.exp(log_r)
    return cfg.adc_max * cfg.r_series / (cfg.r_series + r2)
