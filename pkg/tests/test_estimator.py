"""End-to-end estimator behaviour: scheduling, accuracy, interference loop."""
import numpy as np
import pytest

from tdipdft import WindowConfig
from tdipdft.estimator import (
    EstimatorConfig,
    TdIpdftEstimator,
    estimate_window,
    oobi_decision,
    rocof,
    spectral_energies,
)
from tdipdft.quadrature import td_qsg
from tdipdft.siggen import SignalKind, TestSignalSpec, ground_truth, synthesize
from tdipdft.spectral import SlidingSpectrum

CFG = EstimatorConfig()
N = CFG.window.samples
FS = CFG.window.fs


def _run(spec, config=None):
    est = TdIpdftEstimator(config)
    return est.process(synthesize(spec))


def _errors(reports, spec, t_lo=0.1, t_hi=None):
    t_hi = t_hi if t_hi is not None else spec.duration - 0.1
    sel = [r for r in reports if t_lo <= r.timestamp <= t_hi]
    t = np.array([r.timestamp for r in sel])
    g = ground_truth(spec, t)
    phasors = np.array([r.phasor for r in sel])
    tve = 100.0 * np.abs(phasors - g.phasor) / np.abs(g.phasor)
    fe = np.abs(np.array([r.frequency for r in sel]) - g.frequency)
    rfe = np.abs(np.array([r.rocof for r in sel]) - g.rocof)
    return sel, tve, fe, rfe


# --- report scheduling ---------------------------------------------------------


def test_report_grid_and_window_placement():
    spec = TestSignalSpec(duration=0.5)
    reports = _run(spec)
    assert [r.timestamp for r in reports] == pytest.approx(
        [0.04 + 0.02 * i for i in range(len(reports))]
    )
    # windows end half a window past the stamp, so 0.5 s serves 0.04 .. 0.46
    assert len(reports) == 22
    for r in reports:
        # window ends half a window after the stamped sample
        assert r.window_end == round(r.timestamp * FS) + N // 2
    assert reports[0].rocof == 0.0


def test_chunked_feeding_matches_one_shot():
    spec = TestSignalSpec(f0=51.3, duration=0.3)
    x = synthesize(spec)
    whole = TdIpdftEstimator().process(x)
    piecewise = TdIpdftEstimator()
    got = []
    rng = np.random.default_rng(3)
    i = 0
    while i < x.size:
        step = int(rng.integers(1, 4000))
        got.extend(piecewise.process(x[i:i + step]))
        i += step
    assert len(got) == len(whole)
    for a, b in zip(got, whole):
        assert a.timestamp == b.timestamp
        assert a.frequency == b.frequency
        assert a.amplitude == b.amplitude
        assert a.phase == b.phase


def test_next_report_time_advances():
    est = TdIpdftEstimator()
    assert est.next_report_time == pytest.approx(0.04)
    n_done = len(est.process(synthesize(TestSignalSpec(duration=0.1))))
    assert n_done == 2  # 5000 samples close the 0.04 s and 0.06 s windows
    assert est.next_report_time == pytest.approx(0.08)


def test_config_validation():
    with pytest.raises(ValueError):
        EstimatorConfig(reporting_rate=48.0)  # 50 kHz / 48 is fractional
    with pytest.raises(ValueError):
        EstimatorConfig(q_max=0)


# --- steady-state accuracy -----------------------------------------------------


def test_nominal_frequency_is_exact():
    spec = TestSignalSpec(f0=50.0, phase=0.3, duration=0.5)
    _, tve, fe, rfe = _errors(_run(spec), spec)
    assert tve.max() < 1e-9
    assert fe.max() < 1e-10
    assert rfe.max() < 1e-8


@pytest.mark.parametrize("f0", [45.0, 47.5, 52.5, 55.0])
def test_off_nominal_accuracy_noise_free(f0):
    spec = TestSignalSpec(f0=f0, phase=-0.7, duration=0.5)
    sel, tve, fe, rfe = _errors(_run(spec), spec)
    assert tve.max() < 7e-4          # percent
    assert fe.max() < 6e-5           # Hz
    assert rfe.max() < 4e-3          # Hz/s
    assert all(r.iterations == 1 for r in sel)
    assert not any(r.interference_detected for r in sel)


def test_noisy_steady_state_stays_within_published_band():
    spec = TestSignalSpec(f0=52.5, duration=1.0, snr_db=60.0, noise_seed=11)
    sel, tve, fe, rfe = _errors(_run(spec), spec)
    assert tve.max() < 0.02
    assert fe.max() < 3e-3
    assert rfe.max() < 0.25
    assert not any(r.interference_detected for r in sel)


def test_rocof_is_difference_of_frequencies():
    assert rocof(50.5, 50.0, 50.0) == pytest.approx(25.0)
    assert rocof(50.0, None, 50.0) == 0.0
    spec = TestSignalSpec(f0=48.7, duration=0.3)
    reports = _run(spec)
    r1, r2 = reports[3], reports[4]
    assert r2.rocof == pytest.approx((r2.frequency - r1.frequency) * 50.0)


# --- interference handling -------------------------------------------------------


def _oobi_spec(ratio, fi=25.0, **kw):
    return TestSignalSpec(kind=SignalKind.INTERFERENCE, f0=50.0,
                          interference_frequency=fi, interference_ratio=ratio,
                          interference_phase=0.9, duration=0.5, **kw)


def test_interference_triggers_and_converges():
    sel, tve, fe, _ = _errors(_run(_oobi_spec(0.1)), _oobi_spec(0.1))
    assert all(r.interference_detected for r in sel)
    assert tve.max() < 5e-3
    assert fe.max() < 2e-3
    for r in sel:
        assert 2 <= r.iterations <= CFG.q_max
        assert r.interference is not None
        assert r.interference.frequency == pytest.approx(25.0, abs=0.05)
        assert r.interference.amplitude == pytest.approx(0.1, abs=2e-3)
        # compensation shrinks the unexplained energy as iterations proceed
        assert r.residual_trace[-1] < r.residual_trace[0]
        assert len(r.residual_trace) == r.iterations


def test_interference_triggers_at_five_percent():
    sel, tve, _, _ = _errors(_run(_oobi_spec(0.05)), _oobi_spec(0.05))
    assert all(r.interference_detected for r in sel)
    assert tve.max() < 3e-3


def test_clean_signal_does_not_trigger():
    spec = TestSignalSpec(f0=47.5, duration=0.5)
    sel = _run(spec)
    assert not any(r.interference_detected for r in sel)
    assert all(r.iterations == 1 for r in sel)
    assert all(len(r.residual_trace) == 1 for r in sel)


def test_second_harmonic_is_detected_and_removed():
    spec = TestSignalSpec(kind=SignalKind.HARMONIC, duration=0.5,
                          harmonic_order=2, harmonic_ratio=0.1)
    sel, tve, fe, _ = _errors(_run(spec), spec)
    # 100 Hz sits inside the retained bins and trips the energy test ...
    assert all(r.interference_detected for r in sel)
    assert tve.max() < 1e-8
    assert fe.max() < 1e-9


def test_third_harmonic_is_invisible():
    spec = TestSignalSpec(kind=SignalKind.HARMONIC, duration=0.5,
                          harmonic_order=3, harmonic_ratio=0.1)
    sel, tve, fe, _ = _errors(_run(spec), spec)
    # ... while 150 Hz falls outside them and needs no compensation
    assert not any(r.interference_detected for r in sel)
    assert tve.max() < 1e-8


def test_low_interferer_is_refined_despite_bin_zero_argmax():
    # a 10 Hz tone sits 0.6 bins up, so the residual argmax can land on
    # bin 0 where the three-point fit has no lower neighbour; the fit
    # anchors at bin 1 instead of abandoning the compensation
    spec = _oobi_spec(0.1, fi=10.0)
    sel, _, fe, _ = _errors(_run(spec), spec)
    for r in sel:
        assert r.interference_detected
        assert r.interference is not None
        assert r.iterations >= 2
        assert abs(r.interference.frequency - 10.0) < 0.05
    assert fe.max() < 1e-3


def test_last_bin_argmax_refines_from_the_inside():
    # mirrored case: interferer centred on the last retained bin keeps the
    # argmax pinned to the edge, yet the fit anchors one bin in
    fi = 7 * CFG.window.delta_f
    spec = _oobi_spec(0.1, fi=fi)
    sel = _run(spec)
    trig = [r for r in sel if r.interference_detected]
    assert trig
    assert any(r.k_c == CFG.window.bins - 1 for r in trig)
    for r in trig:
        assert r.interference is not None
        assert r.interference.k_m == CFG.window.bins - 2
        assert r.iterations >= 2
    best = min(abs(r.interference.frequency - fi) for r in trig)
    assert best < 0.5 * CFG.window.delta_f


# --- the energy test in isolation -----------------------------------------------


def test_spectral_energies_bookkeeping():
    total = np.zeros(8, complex)
    total[3] = 10.0
    resid = np.array([0, 0.1, 0, 0.05, 0, 1.0, 0.2, 0], dtype=complex)
    e_t, e_r, k_c, e_c = spectral_energies(total, resid)
    assert e_t == pytest.approx(100.0)
    assert e_r == pytest.approx(np.sum(np.abs(resid) ** 2))
    assert k_c == 5
    assert e_c == pytest.approx(1.0**2 + 0.2**2)


def test_spectral_energies_excludes_fundamental_bin():
    resid = np.zeros(8, complex)
    resid[3] = 9.0  # huge, but that's the fundamental's own bin
    resid[6] = 0.5
    _, _, k_c, e_c = spectral_energies(np.ones(8, complex), resid)
    assert k_c == 6
    assert e_c == pytest.approx(0.25)


def test_spectral_energies_edge_windows():
    resid = np.zeros(8, complex)
    resid[0] = 2.0
    resid[1] = 1.0
    resid[2] = 0.5
    _, _, k_c, e_c = spectral_energies(np.ones(8, complex), resid)
    assert k_c == 0
    assert e_c == pytest.approx(4.0 + 1.0 + 0.25)  # window [0, 2]
    resid = np.zeros(8, complex)
    resid[7] = 2.0
    resid[6] = 1.0
    resid[5] = 0.5
    _, _, k_c, e_c = spectral_energies(np.ones(8, complex), resid)
    assert k_c == 7
    assert e_c == pytest.approx(4.0 + 1.0 + 0.25)  # window [5, 7]


def test_oobi_decision_thresholds():
    assert oobi_decision(2.4e-3, 0.0, CFG)            # at the hard level
    assert not oobi_decision(2.39e-3, 0.764, CFG)     # gray zone, too diffuse
    assert oobi_decision(2.39e-3, 0.765, CFG)         # gray zone, concentrated
    assert oobi_decision(7.4e-4, 0.9, CFG)            # bottom of gray zone
    assert not oobi_decision(7.3e-4, 0.99, CFG)       # below detection floor
    assert not oobi_decision(0.0, 1.0, CFG)


# --- estimate_window plumbing -----------------------------------------------------


def test_estimate_window_on_manual_stream():
    spec = TestSignalSpec(f0=49.3, phase=0.25, duration=0.2)
    x = synthesize(spec)
    s = SlidingSpectrum(CFG.window)
    s.extend(x)
    qsg = td_qsg(s)
    win = estimate_window(qsg.spectrum, qsg.delay, CFG)
    assert win.tone.frequency == pytest.approx(49.3, abs=1e-4)
    assert win.tone.amplitude == pytest.approx(1.0, abs=1e-5)
    assert win.iterations == 1
    assert not win.triggered
    assert win.delay == qsg.delay


def test_capacity_override_trims_first_report():
    cfg = EstimatorConfig(capacity=16)
    est = TdIpdftEstimator(cfg)
    assert est.next_report_time == pytest.approx(0.04)
    reports = est.process(synthesize(TestSignalSpec(duration=0.2)))
    assert reports and reports[0].delay <= 15
