"""Numba-compiled implementations of the streaming hot paths.

Mirrors ``numpy_impl`` function-for-function; the estimator additionally uses
``estimate_window`` from here when this backend is active (the numpy backend
uses the composed reference implementation in ``tdipdft.estimator``).
"""
from __future__ import annotations

import numpy as np
from numba import njit

NAME = "numba"


@njit(cache=True, nogil=True)
def push_chunk(x_ring, acc, w_ring, mu, pushed, chunk):
    n = x_ring.shape[0]
    kp2 = acc.shape[0]
    k = kp2 - 2
    cap = w_ring.shape[0]
    rect = np.empty(kp2, np.complex128)
    for i in range(chunk.shape[0]):
        p = pushed + i
        idx = p % n
        delta = chunk[i] - x_ring[idx]
        x_ring[idx] = chunk[i]
        nxt = (p + 1) % n
        for j in range(kp2):
            acc[j] += delta * mu[j, idx]
            rect[j] = acc[j] * np.conj(mu[j, nxt])
        row = p % cap
        for b in range(k):
            w_ring[row, b] = 0.5 * rect[b + 1] - 0.25 * (rect[b] + rect[b + 2])
    return pushed + chunk.shape[0]


@njit(cache=True)
def _wr(x, n):
    # rectangular-window kernel with the removable singularity at multiples
    # of n evaluated to its limit
    rem = x % n
    if rem < 1e-9 or rem > n - 1e-9:
        return complex(n)
    return np.exp(-1j * np.pi * x * (n - 1.0) / n) * (
        np.sin(np.pi * x) / np.sin(np.pi * x / n)
    )


@njit(cache=True)
def _wh(x, n):
    return 0.5 * _wr(x, n) - 0.25 * (_wr(x - 1.0, n) + _wr(x + 1.0, n))


@njit(cache=True)
def _wrap(x):
    w = x % (2.0 * np.pi)
    if w > np.pi:
        w -= 2.0 * np.pi
    return w


@njit(cache=True)
def _interp3(xm, x0, xp, k_m, delta_f):
    """Three-point interpolation on normalized bins around the peak.

    Returns (freq, amp, phase, delta, eps, ok)."""
    m_prev = abs(xm)
    m_peak = abs(x0)
    m_next = abs(xp)
    denom = m_prev + 2.0 * m_peak + m_next
    if denom < 1e-300:
        return 0.0, 0.0, 0.0, 0.0, 1, False
    if m_next >= m_prev:
        eps = 1
        delta = 2.0 * (m_next - m_prev) / denom
    else:
        eps = -1
        delta = -2.0 * (m_prev - m_next) / denom
    if abs(delta) < 1e-12:
        scallop = 1.0
    else:
        scallop = abs(np.pi * delta / np.sin(np.pi * delta))
    amp = 2.0 * m_peak * scallop * abs(delta * delta - 1.0)
    phase = _wrap(np.angle(x0) - np.pi * delta)
    freq = (k_m + delta) * delta_f
    return freq, amp, phase, delta, eps, True


@njit(cache=True)
def _sigma(delay, freq, fs):
    theta = 2.0 * np.pi * freq * delay / fs
    sp = 1.0 + np.exp(1j * (np.pi / 2.0 - theta))
    sm = 1.0 + np.exp(1j * (np.pi / 2.0 + theta))
    return sp, sm


@njit(cache=True)
def _both_images(amp, phase, freq, sp, sm, delta_f, n, hann_sum, out):
    """Fill ``out`` with both images of the real tone behind a complex-signal
    estimate (amp/phase as returned by _interp3 on the quadrature spectrum)."""
    v_plus = 0.5 * amp * np.exp(1j * phase)
    v_minus = np.conj(v_plus / sp) * sm
    u = freq / delta_f
    for k in range(out.shape[0]):
        out[k] = (v_plus * _wh(k - u, n)
                  + v_minus * _wh(k + u, n)) / hann_sum


@njit(cache=True)
def _peak_interior(x):
    """Largest-magnitude bin over [1, K-2] (both neighbours available)."""
    best = 1
    bm = abs(x[1])
    for k in range(2, x.shape[0] - 1):
        m = abs(x[k])
        if m > bm:
            bm = m
            best = k
    return best


@njit(cache=True)
def _peak_excluding(x, skip):
    best = -1
    bm = -1.0
    for k in range(x.shape[0]):
        if k == skip:
            continue
        m = abs(x[k])
        if m > bm:
            bm = m
            best = k
    return best


@njit(cache=True)
def estimate_window_kernel(x, delay, fs, n, delta_f, hann_sum, q_max,
                           l_lo, l_hi, l_conc, l_re, trace, out):
    """Compiled twin of the composed per-window estimation loop.

    ``x`` holds the normalized in-quadrature bins.  Results land in ``out``
    (see the wrapper in tdipdft.estimator for the layout); the residual
    energy of each iteration lands in ``trace``.
    """
    kbins = x.shape[0]
    km = _peak_interior(x)
    freq, amp, phase, delta, eps, ok = _interp3(x[km - 1], x[km], x[km + 1],
                                                km, delta_f)
    if not ok:
        out[18] = 1.0
        return
    xi_pos = np.zeros(kbins, np.complex128)
    xi_neg = np.zeros(kbins, np.complex128)
    x0 = np.empty(kbins, np.complex128)
    xi_both = np.empty(kbins, np.complex128)
    has_interf = False
    fi_freq = 0.0
    fi_amp = 0.0
    fi_phase = 0.0
    fi_km = 0
    fi_delta = 0.0
    fi_eps = 1
    triggered = False
    ratio_oob = 0.0
    ratio_conc = 0.0
    k_c = -1
    r_prev = np.inf
    q = 0
    for q in range(1, q_max + 1):
        sp, sm = _sigma(delay, freq, fs)
        _both_images(amp, phase, freq, sp, sm, delta_f, n, hann_sum, x0)
        r_e = 0.0
        for k in range(kbins):
            x0[k] = x[k] - x0[k] - xi_neg[k]  # x0 now holds the residual
            dr = x0[k] - xi_pos[k]
            r_e += dr.real * dr.real + dr.imag * dr.imag
        trace[q - 1] = r_e
        if q == 1:
            e_total = 0.0
            e_resid = 0.0
            for k in range(kbins):
                e_total += x[k].real * x[k].real + x[k].imag * x[k].imag
                e_resid += x0[k].real * x0[k].real + x0[k].imag * x0[k].imag
            k_c = _peak_excluding(x0, 3)
            lo = k_c - 1
            if lo < 0:
                lo = 0
            if lo > kbins - 3:
                lo = kbins - 3
            e_conc = 0.0
            for k in range(lo, lo + 3):
                e_conc += x0[k].real * x0[k].real + x0[k].imag * x0[k].imag
            ratio_oob = e_conc / e_total
            ratio_conc = e_conc / e_resid if e_resid > 0.0 else 0.0
            triggered = ratio_oob >= l_hi or (ratio_oob >= l_lo
                                              and ratio_conc >= l_conc)
            if not triggered:
                break
        else:
            if abs(r_e - r_prev) < l_re:
                break
            k_c = _peak_excluding(x0, 3)
        r_prev = r_e
        # anchor the three-point fit at the nearest interior bin (the
        # argmax can land on bin 0 for tones near the bottom of the band)
        ki = k_c
        if ki < 1:
            ki = 1
        if ki > kbins - 2:
            ki = kbins - 2
        fi, ai, pi, di, ei, ok = _interp3(x0[ki - 1], x0[ki], x0[ki + 1],
                                          ki, delta_f)
        if not ok:
            out[18] = 1.0
            return
        has_interf = True
        fi_freq, fi_amp, fi_phase = fi, ai, pi
        fi_km, fi_delta, fi_eps = ki, di, ei
        spi, smi = _sigma(delay, fi, fs)
        vi_plus = 0.5 * ai * np.exp(1j * pi)
        vi_minus = np.conj(vi_plus / spi) * smi
        u = fi / delta_f
        for k in range(kbins):
            xi_pos[k] = vi_plus * _wh(k - u, n) / hann_sum
            xi_neg[k] = vi_minus * _wh(k + u, n) / hann_sum
            xi_both[k] = x[k] - (xi_pos[k] + xi_neg[k])
        km = _peak_interior(xi_both)
        freq, amp, phase, delta, eps, ok = _interp3(
            xi_both[km - 1], xi_both[km], xi_both[km + 1], km, delta_f
        )
        if not ok:
            out[18] = 1.0
            return
    # amplitude/phase correction back to the real tone
    sp, sm = _sigma(delay, freq, fs)
    out[0] = freq
    out[1] = amp / abs(sp)
    out[2] = _wrap(phase - np.angle(sp))
    out[3] = km
    out[4] = delta
    out[5] = eps
    out[6] = q
    out[7] = 1.0 if triggered else 0.0
    out[8] = ratio_oob
    out[9] = ratio_conc
    out[10] = k_c
    out[11] = 1.0 if has_interf else 0.0
    if has_interf:
        spi, smi = _sigma(delay, fi_freq, fs)
        out[12] = fi_freq
        out[13] = fi_amp / abs(spi)
        out[14] = _wrap(fi_phase - np.angle(spi))
        out[15] = fi_km
        out[16] = fi_delta
        out[17] = fi_eps
    out[18] = 0.0


@njit(cache=True)
def _e_ipdft3(x, tmp, rounds, k_fixed, delta_f, n, hann_sum):
    """Enhanced interpolation on real-signal bins: subtract the estimated
    negative image and re-interpolate, ``rounds`` times.

    ``k_fixed`` < 0 lets the peak float over the interior bins; otherwise the
    peak bin is pinned (interferer refinement).  Returns
    (freq, amp, phase, delta, km, eps, ok)."""
    km = k_fixed if k_fixed >= 0 else _peak_interior(x)
    freq, amp, phase, delta, eps, ok = _interp3(x[km - 1], x[km], x[km + 1],
                                                km, delta_f)
    if not ok:
        return freq, amp, phase, delta, km, eps, False
    for _ in range(rounds):
        v_neg = np.conj(0.5 * amp * np.exp(1j * phase))
        u = freq / delta_f
        for k in range(x.shape[0]):
            tmp[k] = x[k] - v_neg * _wh(k + u, n) / hann_sum
        km = k_fixed if k_fixed >= 0 else _peak_interior(tmp)
        freq, amp, phase, delta, eps, ok = _interp3(
            tmp[km - 1], tmp[km], tmp[km + 1], km, delta_f
        )
        if not ok:
            return freq, amp, phase, delta, km, eps, False
    return freq, amp, phase, delta, km, eps, True


@njit(cache=True)
def _real_tone(amp, phase, freq, delta_f, n, hann_sum, out):
    v = 0.5 * amp * np.exp(1j * phase)
    vc = np.conj(v)
    u = freq / delta_f
    for k in range(out.shape[0]):
        out[k] = (v * _wh(k - u, n) + vc * _wh(k + u, n)) / hann_sum


@njit(cache=True)
def compensated_window_kernel(x, rounds, trigger_ratio, q_iter, delta_f, n,
                              hann_sum, freq_log, delta_log, out):
    """Compiled twin of the fixed-iteration comparison loop."""
    kbins = x.shape[0]
    tmp = np.empty(kbins, np.complex128)
    fund = np.empty(kbins, np.complex128)
    resid = np.empty(kbins, np.complex128)
    freq, amp, phase, delta, km, eps, ok = _e_ipdft3(
        x, tmp, rounds, -1, delta_f, n, hann_sum
    )
    if not ok:
        out[9] = 1.0
        return
    freq_log[0] = freq
    delta_log[0] = delta
    _real_tone(amp, phase, freq, delta_f, n, hann_sum, fund)
    e_total = 0.0
    e_resid = 0.0
    for k in range(kbins):
        e_total += x[k].real * x[k].real + x[k].imag * x[k].imag
        d = x[k] - fund[k]
        e_resid += d.real * d.real + d.imag * d.imag
    ratio = e_resid / e_total if e_total > 0.0 else 0.0
    triggered = ratio >= trigger_ratio
    iters = 0
    if triggered:
        have_i = False
        fi = 0.0
        ai = 0.0
        pi = 0.0
        for _ in range(q_iter):
            for k in range(kbins):
                resid[k] = x[k] - fund[k]
            if have_i:
                # peel off the interferer's negative image with the best
                # estimate so far, so the compensation sharpens across
                # iterations instead of restarting from the raw residual
                v_neg = np.conj(0.5 * ai * np.exp(1j * pi))
                u = fi / delta_f
                for k in range(kbins):
                    resid[k] = resid[k] - v_neg * _wh(k + u, n) / hann_sum
            k_c = _peak_excluding(resid, 3)
            if k_c < 1:
                k_c = 1
            if k_c > kbins - 2:
                k_c = kbins - 2
            fi, ai, pi, di, ei, ok = _interp3(
                resid[k_c - 1], resid[k_c], resid[k_c + 1], k_c, delta_f
            )
            if not ok:
                out[9] = 1.0
                return
            have_i = True
            _real_tone(ai, pi, fi, delta_f, n, hann_sum, resid)
            for k in range(kbins):
                resid[k] = x[k] - resid[k]  # spectrum minus the interferer
            freq, amp, phase, delta, km, eps, ok = _e_ipdft3(
                resid, tmp, rounds, -1, delta_f, n, hann_sum
            )
            if not ok:
                out[9] = 1.0
                return
            _real_tone(amp, phase, freq, delta_f, n, hann_sum, fund)
            iters += 1
            freq_log[iters] = freq
            delta_log[iters] = delta
    out[0] = freq
    out[1] = amp
    out[2] = phase
    out[3] = delta
    out[4] = km
    out[5] = eps
    out[6] = 1.0 if triggered else 0.0
    out[7] = ratio
    out[8] = iters
    out[9] = 0.0
