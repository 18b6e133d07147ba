"""Signal synthesis against per-sample formulas and derivative checks."""
import json

import numpy as np
import pytest

from tdipdft.ipdft import wrap_phase
from tdipdft.siggen import (
    GroundTruth,
    SignalKind,
    TestSignalSpec,
    ground_truth,
    ground_truth_at,
    synthesize,
    write_csv,
    write_f64,
)

FS = 50_000.0


def _truth_freq_by_differencing(spec, t, h=1e-6):
    """Frequency from the synthesized total angle via central differences."""
    hi = ground_truth(spec, t + h)
    lo = ground_truth(spec, t - h)
    dphi = np.angle(np.exp(1j * (hi.phase - lo.phase)))
    return spec.f_nominal + dphi / (2.0 * np.pi * 2 * h)


def test_steady_matches_cosine():
    spec = TestSignalSpec(kind=SignalKind.STEADY, f0=52.0, amplitude=1.3,
                          phase=0.4, duration=0.1)
    x = synthesize(spec)
    t = spec.times()
    np.testing.assert_allclose(
        x, 1.3 * np.cos(2 * np.pi * 52.0 * t + 0.4), atol=1e-14
    )


def test_steady_ground_truth_phasor_convention():
    spec = TestSignalSpec(f0=52.0, phase=0.4)
    g = ground_truth(spec, [0.0, 0.25, 1.0])
    # off-nominal tone: synchrophasor angle advances at (f0 - f_nominal)
    expect = wrap_phase(0.4 + 2 * np.pi * 2.0 * np.array([0.0, 0.25, 1.0]))
    np.testing.assert_allclose(g.phase, expect, atol=1e-12)
    np.testing.assert_allclose(g.frequency, 52.0)
    np.testing.assert_allclose(g.rocof, 0.0)
    np.testing.assert_allclose(np.abs(g.phasor), 1.0)


def test_harmonic_adds_single_order():
    spec = TestSignalSpec(kind=SignalKind.HARMONIC, f0=50.0, duration=0.05,
                          harmonic_order=3, harmonic_ratio=0.1,
                          harmonic_phase=0.2)
    t = spec.times()
    expect = np.cos(2 * np.pi * 50 * t) + 0.1 * np.cos(2 * np.pi * 150 * t + 0.2)
    np.testing.assert_allclose(synthesize(spec), expect, atol=1e-14)
    g = ground_truth(spec, [0.03])  # truth tracks the fundamental only
    assert g.amplitude[0] == 1.0 and g.frequency[0] == 50.0


def test_interference_adds_out_of_band_tone():
    spec = TestSignalSpec(kind=SignalKind.INTERFERENCE, duration=0.05,
                          interference_frequency=85.0, interference_ratio=0.1,
                          interference_phase=-0.3)
    t = spec.times()
    expect = np.cos(2 * np.pi * 50 * t) + 0.1 * np.cos(2 * np.pi * 85 * t - 0.3)
    np.testing.assert_allclose(synthesize(spec), expect, atol=1e-14)


def test_amplitude_modulation_envelope_and_truth():
    spec = TestSignalSpec(kind=SignalKind.AMPLITUDE_MOD, duration=0.2,
                          mod_frequency=2.0, mod_depth_amp=0.1)
    t = spec.times()
    env = 1.0 + 0.1 * np.cos(2 * np.pi * 2.0 * t)
    np.testing.assert_allclose(synthesize(spec), env * np.cos(2 * np.pi * 50 * t),
                               atol=1e-14)
    g = ground_truth(spec, t[::777])
    np.testing.assert_allclose(g.amplitude, env[::777], atol=1e-14)
    np.testing.assert_allclose(g.frequency, 50.0)
    np.testing.assert_allclose(g.rocof, 0.0)


def test_phase_modulation_truth_matches_derivatives():
    spec = TestSignalSpec(kind=SignalKind.PHASE_MOD, mod_frequency=5.0,
                          mod_depth_phase=np.pi / 18)
    t = np.linspace(0.1, 1.9, 23)
    g = ground_truth(spec, t)
    np.testing.assert_allclose(g.frequency, _truth_freq_by_differencing(spec, t),
                               atol=1e-4)
    # rocof from differencing the analytic frequency
    h = 1e-6
    num_rocof = (ground_truth(spec, t + h).frequency
                 - ground_truth(spec, t - h).frequency) / (2 * h)
    np.testing.assert_allclose(g.rocof, num_rocof, atol=1e-3)
    # peak excursions: f0 +- ka*fm, rocof amplitude 2*pi*ka*fm^2
    assert np.max(np.abs(g.frequency - 50.0)) <= np.pi / 18 * 5.0 + 1e-9
    assert np.max(np.abs(g.rocof)) <= 2 * np.pi * np.pi / 18 * 25.0 + 1e-9


def test_ramp_angle_continuous_and_truth_piecewise():
    spec = TestSignalSpec(kind=SignalKind.RAMP, f0=45.0, ramp_rate=1.0,
                          ramp_start=0.2, ramp_stop=1.2, duration=2.0)
    g = ground_truth(spec, [0.0, 0.1, 0.2, 0.7, 1.2, 1.5])
    np.testing.assert_allclose(g.frequency, [45, 45, 45, 45.5, 46, 46],
                               atol=1e-12)
    np.testing.assert_allclose(g.rocof, [0, 0, 1, 1, 0, 0], atol=1e-12)
    t = np.linspace(0.05, 1.95, 31)
    np.testing.assert_allclose(ground_truth(spec, t).frequency,
                               _truth_freq_by_differencing(spec, t), atol=1e-4)
    # no sample-level discontinuity at the ramp ends
    x = synthesize(spec)
    assert np.max(np.abs(np.diff(x))) < 2 * np.pi * 47 / FS * 1.05


def test_ramp_stop_defaults_to_duration():
    spec = TestSignalSpec(kind=SignalKind.RAMP, f0=48.0, ramp_rate=2.0,
                          duration=1.0)
    g = ground_truth(spec, [0.5, 1.0])
    np.testing.assert_allclose(g.frequency, [49.0, 50.0])


def test_amplitude_step_is_sample_aligned():
    spec = TestSignalSpec(kind=SignalKind.AMPLITUDE_STEP, step_time=1.0,
                          step_amp=0.1, duration=2.0)
    x = synthesize(spec)
    t = spec.times()
    n_s = round(1.0 * FS)
    base = np.cos(2 * np.pi * 50 * t)
    np.testing.assert_allclose(x[:n_s], base[:n_s], atol=1e-14)
    np.testing.assert_allclose(x[n_s:], 1.1 * base[n_s:], atol=1e-14)
    a_before, _, _, _ = ground_truth_at(spec, (n_s - 1) / FS)
    a_after, _, _, _ = ground_truth_at(spec, n_s / FS)
    assert a_before == 1.0 and a_after == pytest.approx(1.1)


def test_phase_step_is_sample_aligned():
    spec = TestSignalSpec(kind=SignalKind.PHASE_STEP, step_time=0.5,
                          step_phase=np.pi / 18, duration=1.0)
    x = synthesize(spec)
    t = spec.times()
    n_s = round(0.5 * FS)
    np.testing.assert_allclose(x[:n_s], np.cos(2 * np.pi * 50 * t[:n_s]),
                               atol=1e-14)
    np.testing.assert_allclose(
        x[n_s:], np.cos(2 * np.pi * 50 * t[n_s:] + np.pi / 18), atol=1e-14
    )
    _, p0, _, _ = ground_truth_at(spec, 0.25)
    _, p1, _, _ = ground_truth_at(spec, 0.75)
    assert wrap_phase(p1 - p0) == pytest.approx(np.pi / 18, abs=1e-12)


def test_composite_overlays_interference_on_base():
    spec = TestSignalSpec(kind=SignalKind.COMPOSITE, base_kind=SignalKind.RAMP,
                          f0=48.0, ramp_rate=1.0, duration=0.5,
                          interference_frequency=95.0, interference_ratio=0.1,
                          interference_phase=0.1)
    ramp_only = TestSignalSpec(kind=SignalKind.RAMP, f0=48.0, ramp_rate=1.0,
                               duration=0.5)
    t = spec.times()
    overlay = 0.1 * np.cos(2 * np.pi * 95.0 * t + 0.1)
    np.testing.assert_allclose(synthesize(spec),
                               synthesize(ramp_only) + overlay, atol=1e-14)
    g = ground_truth(spec, [0.4])
    assert g.frequency[0] == pytest.approx(48.4)  # truth follows the base


def test_composite_requires_base_kind():
    with pytest.raises(ValueError):
        synthesize(TestSignalSpec(kind=SignalKind.COMPOSITE))
    with pytest.raises(ValueError):
        synthesize(TestSignalSpec(kind=SignalKind.COMPOSITE,
                                  base_kind=SignalKind.COMPOSITE))


def test_noise_variance_and_reproducibility():
    spec = TestSignalSpec(snr_db=60.0, noise_seed=7, duration=2.0)
    clean = TestSignalSpec(duration=2.0)
    noise = synthesize(spec) - synthesize(clean)
    target = 0.5 * 10 ** (-6.0)
    assert np.var(noise) == pytest.approx(target, rel=0.05)
    np.testing.assert_array_equal(noise, synthesize(spec) - synthesize(clean))
    other = TestSignalSpec(snr_db=60.0, noise_seed=8, duration=2.0)
    assert not np.array_equal(synthesize(other), synthesize(spec))


def test_json_round_trip():
    spec = TestSignalSpec(kind=SignalKind.COMPOSITE, base_kind=SignalKind.PHASE_MOD,
                          f0=49.25, mod_frequency=2.0, snr_db=80.0,
                          interference_ratio=0.05, noise_seed=123)
    again = TestSignalSpec.from_json(spec.to_json())
    assert again == spec
    d = json.loads(spec.to_json())
    assert d["kind"] == "composite" and d["base_kind"] == "phase_mod"
    steady = TestSignalSpec()
    assert TestSignalSpec.from_json(steady.to_json()) == steady


def test_sample_dumps_round_trip(tmp_path):
    spec = TestSignalSpec(duration=0.01, f0=51.0)
    raw = tmp_path / "sig.f64"
    write_f64(raw, spec)
    np.testing.assert_array_equal(np.fromfile(raw, dtype="<f8"),
                                  synthesize(spec))
    csv = tmp_path / "sig.csv"
    write_csv(csv, spec)
    lines = csv.read_text().strip().splitlines()
    assert lines[0] == "index,time,value"
    assert len(lines) == spec.n_samples + 1
    i, t, v = lines[4].split(",")
    assert int(i) == 3 and float(t) == pytest.approx(3 / FS)
    assert float(v) == pytest.approx(synthesize(spec)[3], abs=1e-10)
