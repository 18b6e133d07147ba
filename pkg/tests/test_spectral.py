"""Streaming spectrum engine against direct-summation references."""
import numpy as np
import pytest

from tdipdft import (
    WindowConfig,
    SlidingSpectrum,
    dirichlet_kernel,
    hann_kernel,
    window_in_freq,
    complex_spectrum,
    InsufficientHistoryError,
)

from _oracles import (
    direct_rect_bins,
    direct_windowed_bins,
    direct_dft_bin,
    periodic_hann,
    delayed_signal,
    tone,
)

CFG = WindowConfig()
N = CFG.samples
RNG = np.random.default_rng(20260814)


# --- window geometry ---------------------------------------------------------


def test_default_config_geometry():
    assert N == 3000
    assert CFG.delta_f == pytest.approx(50_000.0 / 3000.0)
    assert CFG.hann_sum == pytest.approx(1500.0)
    # normalization really is the window sum
    assert periodic_hann(N).sum() == pytest.approx(CFG.hann_sum)


def test_config_rejects_fractional_window():
    with pytest.raises(ValueError):
        WindowConfig(fs=50_000.0, f_nominal=51.0, cycles=3)


def test_config_rejects_too_few_bins():
    with pytest.raises(ValueError):
        WindowConfig(bins=7)


# --- kernels -----------------------------------------------------------------


def test_dirichlet_matches_direct_sum_off_grid():
    n = 240
    for off in [0.3, 1.7, -2.25, 5.5, 0.001]:
        i = np.arange(n)
        direct = np.sum(np.exp(-2j * np.pi * off * i / n))
        assert dirichlet_kernel(off, n) == pytest.approx(direct, abs=1e-8)


def test_dirichlet_on_grid_is_n_or_zero():
    n = 240
    assert dirichlet_kernel(0.0, n) == pytest.approx(n)
    assert dirichlet_kernel(n, n) == pytest.approx(n)
    assert dirichlet_kernel(-2 * n, n) == pytest.approx(n)
    for k in [1, 2, -3, 17, n - 1]:
        assert abs(dirichlet_kernel(float(k), n)) < 1e-9 * n


def test_hann_kernel_matches_windowed_direct_sum():
    n = 240
    w = periodic_hann(n)
    for off in [0.0, 0.4, 1.0, -1.6, 3.3]:
        i = np.arange(n)
        direct = np.sum(w * np.exp(-2j * np.pi * off * i / n))
        assert hann_kernel(off, n) == pytest.approx(direct, abs=1e-8)
    assert hann_kernel(0.0, n) == pytest.approx(n / 2)
    for k in [2, 3, -5, 40]:
        assert abs(hann_kernel(float(k), n)) < 1e-9 * n


def test_kernels_vectorized():
    n = 64
    offs = np.linspace(-3, 3, 41)
    dv = dirichlet_kernel(offs, n)
    hv = hann_kernel(offs, n)
    for i, off in enumerate(offs):
        assert dv[i] == pytest.approx(dirichlet_kernel(float(off), n), abs=1e-10)
        assert hv[i] == pytest.approx(hann_kernel(float(off), n), abs=1e-10)


# --- streaming engine vs direct summation -------------------------------------


def _stream_with(x: np.ndarray, **kw) -> SlidingSpectrum:
    s = SlidingSpectrum(CFG, **kw)
    s.extend(x)
    return s


def test_rect_bins_match_direct_sum():
    x = tone(CFG.fs, 52.1, 1.0, 0.7, N + 137)
    s = _stream_with(x)
    rect = s.current_rect()
    win = x[-N:]
    ks = np.arange(-1, CFG.bins + 1)
    expect = direct_rect_bins(win, ks)
    np.testing.assert_allclose(rect.bins, expect, atol=1e-6 * N)
    assert rect.k_start == -1
    assert rect.window_end == len(x) - 1
    assert not rect.windowed


def test_windowed_bins_match_direct_sum():
    x = tone(CFG.fs, 47.3, 0.9, -1.2, N + 401) + 0.05 * tone(
        CFG.fs, 91.0, 1.0, 0.3, N + 401
    )
    s = _stream_with(x)
    cur = s.current()
    win = x[-N:]
    expect = direct_windowed_bins(win, np.arange(CFG.bins))
    np.testing.assert_allclose(cur.bins, expect, atol=1e-6 * N)
    assert cur.k_start == 0
    assert cur.normalization == pytest.approx(N / 2)


def test_freq_domain_windowing_equals_time_domain():
    x = RNG.normal(size=N + 50)
    s = _stream_with(x)
    from_rect = window_in_freq(s.current_rect())
    np.testing.assert_allclose(from_rect.bins, s.current().bins,
                               atol=1e-8 * N)


def test_delayed_slice_equals_freshly_computed_delayed_signal():
    d = 250
    x = tone(CFG.fs, 49.7, 1.1, 2.0, N + d + 300)
    s = _stream_with(x)
    got = s.delayed(d)
    # oracle: the delayed signal over the *current* window position
    xd = delayed_signal(x, d)
    expect = direct_windowed_bins(xd[-N:], np.arange(CFG.bins))
    np.testing.assert_allclose(got.bins, expect, atol=1e-6 * N)


def test_delayed_zero_is_current():
    x = RNG.normal(size=N + 10)
    s = _stream_with(x)
    np.testing.assert_array_equal(s.delayed(0).bins, s.current().bins)


def test_streaming_matches_batch_any_chunking():
    x = RNG.normal(size=N + 777)
    whole = _stream_with(x)
    chunked = SlidingSpectrum(CFG)
    i = 0
    for size in [1, 3, 500, N, 100, 2000]:
        chunked.extend(x[i : i + size])
        i += size
    chunked.extend(x[i:])
    np.testing.assert_allclose(chunked.current().bins, whole.current().bins,
                               atol=1e-9 * N)
    np.testing.assert_allclose(chunked._acc, whole._acc, atol=1e-9 * N)


def test_long_stream_roundoff_stays_small():
    # 100k pushes: recursion error must stay bounded well under 1e-9 relative
    x = RNG.normal(size=100_000)
    s = SlidingSpectrum(CFG)
    s.extend(x)
    win = x[-N:]
    expect = direct_windowed_bins(win, np.arange(CFG.bins))
    err = np.max(np.abs(s.current().bins - expect))
    assert err < 1e-9 * N


def test_not_ready_raises():
    s = SlidingSpectrum(CFG)
    s.extend(np.zeros(N - 1))
    assert not s.ready()
    with pytest.raises(InsufficientHistoryError):
        s.current()
    with pytest.raises(InsufficientHistoryError):
        s.current_rect()
    s.push(0.0)
    assert s.ready()
    s.current()


def test_delayed_needs_history_and_capacity():
    s = SlidingSpectrum(CFG, capacity=16)
    s.extend(RNG.normal(size=N + 8))
    s.delayed(8)
    with pytest.raises(InsufficientHistoryError):
        s.delayed(9)  # window not complete yet for that delay
    with pytest.raises(InsufficientHistoryError):
        s.delayed(16)  # beyond ring capacity
    s.extend(RNG.normal(size=20))
    s.delayed(15)


def test_complex_assembly_matches_direct_complex_dft():
    d = 263
    x = tone(CFG.fs, 51.4, 1.0, 0.1, N + d + 100)
    s = _stream_with(x)
    comp = complex_spectrum(s.current(), s.delayed(d))
    # oracle: complex signal x(n) + j x(n-d) over the current window
    xd = delayed_signal(x, d)
    win = (x + 1j * xd)[-N:]
    w = periodic_hann(N)
    expect = np.array([direct_dft_bin(w * win, k) for k in range(CFG.bins)])
    np.testing.assert_allclose(comp.bins, expect, atol=1e-6 * N)


def test_slice_bin_accessor():
    x = RNG.normal(size=N)
    s = _stream_with(x)
    cur = s.current()
    assert cur.bin(3) == complex(cur.bins[3])
    rect = s.current_rect()
    assert rect.bin(-1) == complex(rect.bins[0])
    with pytest.raises(IndexError):
        cur.bin(CFG.bins)
