"""Sensor model tests with hand-derived and synthetic-waveform oracles."""

import math

import numpy as np
import pytest

from robonurse.sensors import (
    EPS_IR,
    EPS_RED,
    OpticalConstants,
    OutOfRangeError,
    PpgFrame,
    SignalError,
    ThermistorConfig,
    VitalSigns,
    detect_ac_period,
    heart_rate_from_period,
    kelvin_to_fahrenheit,
    measure_ppg,
    spo2_from_frames,
    steinhart_kelvin,
    synthesize_ppg,
    synthesize_thermistor,
    temperature_from_adc,
    thermistor_resistance,
)

# Hand evaluation of the saturation ratio with the published constants:
# 100 * 15000 / (8830 + 15000).
SPO2_UNIT_FRAME = 100.0 * 15000.0 / (8830.0 + 15000.0)


def frame(ac_red, ac_ir, dc=10.0):
    return PpgFrame(ac_red=ac_red, dc_red=dc, ac_ir=ac_ir, dc_ir=dc)


class TestSpo2:
    def test_unit_components_hand_value(self):
        assert spo2_from_frames(frame(1.0, 1.0)) == pytest.approx(SPO2_UNIT_FRAME, abs=1e-9)

    def test_zero_ir_is_full_saturation(self):
        assert spo2_from_frames(frame(1.0, 0.0)) == 100.0

    def test_zero_red_is_zero(self):
        assert spo2_from_frames(frame(0.0, 1.0)) == 0.0

    def test_zero_both_rejected(self):
        with pytest.raises(SignalError):
            spo2_from_frames(frame(0.0, 0.0))

    def test_ratio_scale_invariance(self):
        rng = np.random.default_rng(42)
        for _ in range(1000):
            ac_red, ac_ir = rng.uniform(0.01, 5.0, 2)
            k = rng.uniform(0.1, 10.0)
            base = spo2_from_frames(frame(ac_red, ac_ir, dc=20.0))
            scaled = spo2_from_frames(frame(k * ac_red, k * ac_ir, dc=100.0))
            assert scaled == pytest.approx(base, abs=1e-9)

    def test_monotone_in_components(self):
        base = spo2_from_frames(frame(1.0, 1.0))
        assert spo2_from_frames(frame(1.5, 1.0)) > base
        assert spo2_from_frames(frame(1.0, 1.5)) < base

    def test_path_length_cancels(self):
        short = spo2_from_frames(frame(1.0, 1.0), OpticalConstants(path_depth=0.3))
        long = spo2_from_frames(frame(1.0, 1.0), OpticalConstants(path_depth=3.0))
        assert short == pytest.approx(long, abs=1e-12)

    def test_frame_invariants(self):
        with pytest.raises(SignalError):
            PpgFrame(ac_red=1.0, dc_red=0.0, ac_ir=1.0, dc_ir=10.0)
        with pytest.raises(SignalError):
            PpgFrame(ac_red=-0.1, dc_red=10.0, ac_ir=1.0, dc_ir=10.0)
        with pytest.raises(SignalError):
            PpgFrame(ac_red=11.0, dc_red=10.0, ac_ir=1.0, dc_ir=10.0)


class TestHeartRate:
    def test_one_second_period(self):
        assert heart_rate_from_period(1.0) == 60.0

    def test_half_second_period(self):
        assert heart_rate_from_period(0.5) == 120.0

    def test_point_eight(self):
        assert heart_rate_from_period(0.8) == pytest.approx(60.0 / 0.8)

    def test_nonpositive_rejected(self):
        with pytest.raises(SignalError):
            heart_rate_from_period(0.0)


class TestPeriodDetection:
    def test_pure_sinusoid(self):
        rate = 100.0
        t = np.arange(int(5 * rate)) / rate
        x = np.sin(2 * np.pi * 1.25 * t)
        assert detect_ac_period(x, rate) == pytest.approx(0.8, abs=1.0 / rate)

    def test_constant_signal_no_pulse(self):
        with pytest.raises(SignalError):
            detect_ac_period(np.ones(500), 100.0)

    def test_noisy_sinusoid(self):
        rate = 100.0
        rng = np.random.default_rng(7)
        t = np.arange(int(5 * rate)) / rate
        x = np.sin(2 * np.pi * 2.0 * t) + rng.uniform(-0.05, 0.05, t.size)
        assert detect_ac_period(x, rate) == pytest.approx(0.5, abs=0.02)

    def test_too_short_rejected(self):
        with pytest.raises(SignalError):
            detect_ac_period(np.sin(np.arange(100) / 10.0), 100.0)

    def test_low_rate_rejected(self):
        with pytest.raises(SignalError):
            detect_ac_period(np.sin(np.arange(200) / 10.0), 40.0)


class TestThermistor:
    def test_midpoint_gives_series_resistance(self):
        assert thermistor_resistance(511.5) == pytest.approx(10_000.0)

    def test_341_gives_20k(self):
        assert thermistor_resistance(341.0) == pytest.approx(10_000.0 * (1023.0 / 341.0 - 1.0))
        assert thermistor_resistance(341.0) == pytest.approx(20_000.0)

    def test_domain_edges_rejected(self):
        with pytest.raises(OutOfRangeError):
            thermistor_resistance(1023.0)
        with pytest.raises(OutOfRangeError):
            thermistor_resistance(0.0)

    def test_steinhart_at_10k_is_room_temp(self):
        assert steinhart_kelvin(10_000.0) == pytest.approx(298.15, abs=0.5)

    def test_steinhart_ntc_monotone(self):
        assert steinhart_kelvin(3_000.0) > steinhart_kelvin(30_000.0)

    def test_steinhart_independent_evaluation(self):
        cfg = ThermistorConfig()
        r2 = 3000.0
        x = math.log(r2)
        expected = (cfg.c1 + cfg.c2 * x + cfg.c3 * x * x * x) ** -1
        assert steinhart_kelvin(r2, cfg) == pytest.approx(expected, rel=1e-12)

    def test_nonpositive_resistance_rejected(self):
        with pytest.raises(OutOfRangeError):
            steinhart_kelvin(0.0)


class TestKelvinToFahrenheit:
    def test_literal_matches_printed_formula(self):
        assert kelvin_to_fahrenheit(273.15, mode="literal") == pytest.approx(523.67)

    def test_literal_zero(self):
        assert kelvin_to_fahrenheit(1e-12, mode="literal") == pytest.approx(32.0)

    def test_corrected_freezing_point(self):
        assert kelvin_to_fahrenheit(273.15, mode="corrected") == pytest.approx(32.0)

    def test_corrected_is_default(self):
        assert kelvin_to_fahrenheit(310.15) == pytest.approx(98.6, abs=1e-9)


class TestSynthesizePpg:
    def test_noiseless_round_trip_exact(self):
        truth = VitalSigns(heart_rate=60.0, spo2=SPO2_UNIT_FRAME, temp_f=98.6, timestamp=0.0)
        capture = synthesize_ppg(truth, noise_level=0.0, seed=1)
        hr, spo2 = measure_ppg(capture)
        assert spo2 == pytest.approx(truth.spo2, abs=1e-9)
        assert hr == pytest.approx(60.0, abs=1e-9)

    def test_noisy_round_trip_tolerances(self):
        truth = VitalSigns(heart_rate=75.0, spo2=97.0, temp_f=98.6, timestamp=0.0)
        capture = synthesize_ppg(truth, noise_level=0.02, seed=99)
        hr, spo2 = measure_ppg(capture)
        assert abs(hr - 75.0) <= 2.0
        assert abs(spo2 - 97.0) <= 1.0

    def test_same_seed_bit_identical(self):
        truth = VitalSigns(heart_rate=72.0, spo2=96.0, temp_f=98.6, timestamp=0.0)
        a = synthesize_ppg(truth, noise_level=0.05, seed=1234)
        b = synthesize_ppg(truth, noise_level=0.05, seed=1234)
        assert np.array_equal(a.red, b.red) and np.array_equal(a.ir, b.ir)
        assert a.frame == b.frame

    def test_full_saturation_synthesizable(self):
        truth = VitalSigns(heart_rate=80.0, spo2=100.0, temp_f=98.6, timestamp=0.0)
        capture = synthesize_ppg(truth, seed=0)
        _, spo2 = measure_ppg(capture)
        assert spo2 == 100.0

    def test_bad_noise_level_rejected(self):
        truth = VitalSigns(heart_rate=60.0, spo2=95.0, temp_f=98.6, timestamp=0.0)
        with pytest.raises(SignalError):
            synthesize_ppg(truth, noise_level=0.5)

    def test_hr_sweep_noiseless_within_one_sample(self):
        for hr in range(40, 181, 10):
            truth = VitalSigns(heart_rate=float(hr), spo2=97.0, temp_f=98.6, timestamp=0.0)
            capture = synthesize_ppg(truth, noise_level=0.0, seed=hr)
            period = detect_ac_period(capture.red, capture.sample_rate)
            assert abs(period - 60.0 / hr) <= 1.0 / capture.sample_rate


class TestSynthesizeThermistor:
    def test_round_trip_77f(self):
        v = synthesize_thermistor(77.0)
        assert temperature_from_adc(v) == pytest.approx(77.0, abs=0.2)

    def test_round_trip_monotone(self):
        temps = [40.0, 70.0, 98.6, 120.0, 150.0]
        recovered = [temperature_from_adc(synthesize_thermistor(t)) for t in temps]
        assert recovered == sorted(recovered)

    def test_boundary_32f_inside_adc_range(self):
        v = synthesize_thermistor(32.0)
        assert 0.0 < v < 1023.0

    def test_out_of_validity_rejected(self):
        with pytest.raises(OutOfRangeError):
            synthesize_thermistor(200.0)
        with pytest.raises(OutOfRangeError):
            synthesize_thermistor(20.0)

    def test_round_trip_error_over_range(self):
        for temp_f in np.linspace(32.0, 158.0, 64):
            v = synthesize_thermistor(float(temp_f))
            assert abs(temperature_from_adc(v) - temp_f) <= 0.2


class TestVitalSigns:
    def test_invalid_spo2_rejected(self):
        with pytest.raises(OutOfRangeError):
            VitalSigns(heart_rate=60.0, spo2=0.0, temp_f=98.6, timestamp=0.0)

    def test_invalid_hr_rejected(self):
        with pytest.raises(OutOfRangeError):
            VitalSigns(heart_rate=0.0, spo2=95.0, temp_f=98.6, timestamp=0.0)
