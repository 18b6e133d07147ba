"""Three-point interpolated-DFT tone estimation on Hanning-windowed bins.

Given the windowed spectrum of a (possibly complex) signal, locate the
largest bin, interpolate the fractional bin offset from the two neighbours,
and correct amplitude and phase for the scalloping of the window.  Phase is
referenced to the first sample of the analysis window.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import SpectrumSlice, hann_kernel


class NoToneError(ValueError):
    """The three interpolation bins carry no usable energy."""


class InsufficientNeighborsError(ValueError):
    """The peak bin sits on the edge of the slice, so a neighbour needed by
    the three-point interpolation is missing."""


def wrap_phase(x):
    """Wrap angle(s) to (-pi, pi]."""
    w = np.remainder(x, 2.0 * np.pi)
    w = np.where(w > np.pi, w - 2.0 * np.pi, w)
    if np.ndim(x) == 0:
        return float(w)
    return w


@dataclass(frozen=True)
class ToneEstimate:
    """One complex exponential recovered from a windowed spectrum.

    ``amplitude`` is the amplitude of the *real* tone whose positive image
    this is (so the image itself has complex gain ``amplitude/2 * e**(j*phase)``);
    ``phase`` is referenced to the window start.  ``k_m``, ``delta`` and
    ``epsilon`` record the peak bin, fractional offset in (-0.5, 0.5] and the
    side the larger neighbour was on.
    """

    frequency: float
    amplitude: float
    phase: float
    k_m: int
    delta: float
    epsilon: int

    @property
    def image_gain(self) -> complex:
        """Complex amplitude of the positive-frequency exponential."""
        return 0.5 * self.amplitude * np.exp(1j * self.phase)


def find_peak(slc: SpectrumSlice, lo: int | None = None,
              hi: int | None = None) -> int:
    """Absolute index of the largest-magnitude bin, searching k in [lo, hi]
    (clipped to the slice).  Ties go to the lowest index."""
    k0 = slc.k_start
    k1 = k0 + len(slc.bins) - 1
    lo = k0 if lo is None else max(lo, k0)
    hi = k1 if hi is None else min(hi, k1)
    if lo > hi:
        raise ValueError(f"empty search range [{lo}, {hi}]")
    mags = np.abs(slc.bins[lo - k0 : hi - k0 + 1])
    return lo + int(np.argmax(mags))


def interpolate(slc: SpectrumSlice, k_m: int | None = None) -> ToneEstimate:
    """Estimate the dominant tone of a windowed slice.

    The fractional offset delta solves the Hanning scalloping ratio from the
    peak bin and its larger neighbour; amplitude and phase then undo the
    window's attenuation ``sin(pi*delta) / (pi*delta*(1 - delta**2))`` and
    its phase slope ``pi*delta``.
    """
    if not slc.windowed:
        raise ValueError("interpolation expects a Hanning-windowed slice")
    if k_m is None:
        k_m = find_peak(slc)
    i = k_m - slc.k_start
    if i - 1 < 0 or i + 1 >= len(slc.bins):
        raise InsufficientNeighborsError(
            f"peak bin {k_m} has no neighbour inside the slice"
        )
    x = slc.bins[i - 1 : i + 2] / slc.normalization
    m_prev, m_peak, m_next = np.abs(x)
    denom = m_prev + 2.0 * m_peak + m_next
    if denom < 1e-300:
        raise NoToneError("all three interpolation bins are zero")
    eps = 1 if m_next >= m_prev else -1
    larger, smaller = (m_next, m_prev) if eps == 1 else (m_prev, m_next)
    delta = 2.0 * eps * (larger - smaller) / denom
    if abs(delta) < 1e-12:
        scallop = 1.0
    else:
        scallop = abs(np.pi * delta / np.sin(np.pi * delta))
    amp = 2.0 * m_peak * scallop * abs(delta * delta - 1.0)
    phase = wrap_phase(np.angle(x[1]) - np.pi * delta)
    freq = (k_m + delta) * slc.config.delta_f
    return ToneEstimate(freq, amp, float(phase), k_m, float(delta), eps)


def image_bins(gain: complex, frequency: float, ks, config) -> np.ndarray:
    """Normalized windowed bins of ``gain * exp(2j*pi*frequency*t)`` sampled
    over one window (phase referenced to the window start), evaluated at the
    absolute bin indices ``ks``."""
    n = config.samples
    u = frequency / config.delta_f
    offs = np.asarray(ks, dtype=np.float64) - u
    return gain * hann_kernel(offs, n) / config.hann_sum


def real_tone_bins(tone: ToneEstimate, ks, config) -> np.ndarray:
    """Normalized windowed bins of the real tone (both images)."""
    g = tone.image_gain
    return (image_bins(g, tone.frequency, ks, config)
            + image_bins(np.conj(g), -tone.frequency, ks, config))
