"""Delayed in-quadrature signal construction and image bookkeeping.

A real tone's spectrum carries two images whose mutual leakage limits
interpolated-DFT accuracy.  Forming the complex signal
``x(n) + j*x(n - d)`` with d near a quarter period scales the images by

    sigma_plus  = 1 + exp(j*(pi/2 - theta))
    sigma_minus = 1 + exp(j*(pi/2 + theta))        theta = 2*pi*f*d/fs

so at exact quadrature (theta = pi/2) the negative image vanishes entirely,
and near it the image is strongly suppressed.  This module chooses the
delay, assembles the complex-signal spectrum from two windowed slices,
reconstructs both images of a tone estimate on that spectrum, and converts
an estimate made on the complex signal back to real-tone amplitude/phase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .spectral import SlidingSpectrum, SpectrumSlice, complex_spectrum
from .ipdft import ToneEstimate, find_peak, image_bins, interpolate, wrap_phase


class QuadratureDegenerateError(ArithmeticError):
    """The positive-image gain is (numerically) zero, so the real tone
    cannot be recovered from the complex-signal estimate."""


@dataclass(frozen=True)
class DelayGains:
    """Image gains of the delayed in-quadrature construction for one
    (delay, frequency) pair."""

    delay: int
    frequency: float
    theta: float
    sigma_plus: complex
    sigma_minus: complex


def nominal_delay(fs: float, frequency: float) -> int:
    """Quarter-period delay in samples, rounded half away from zero."""
    if frequency <= 0:
        raise ValueError("frequency must be positive")
    return int(math.floor(fs / (4.0 * frequency) + 0.5))


def delay_gains(delay: int, frequency: float, fs: float) -> DelayGains:
    theta = 2.0 * np.pi * frequency * delay / fs
    sp = 1.0 + np.exp(1j * (np.pi / 2.0 - theta))
    sm = 1.0 + np.exp(1j * (np.pi / 2.0 + theta))
    return DelayGains(int(delay), float(frequency), float(theta),
                      complex(sp), complex(sm))


@dataclass
class QsgResult:
    """Complex-signal spectrum plus the coarse estimate that sized its delay."""

    spectrum: SpectrumSlice
    delay: int
    coarse: ToneEstimate


def td_qsg(stream: SlidingSpectrum, band: tuple[float, float] = (40.0, 70.0),
           fallback_frequency: float | None = None) -> QsgResult:
    """Build the delayed in-quadrature spectrum for the current window.

    A coarse interpolation on the real signal picks the delay; if the coarse
    frequency falls outside ``band`` (heavy interference, start-up), the
    delay for the nominal frequency is used instead.  The delay is clamped
    to what the stream's history ring can serve.
    """
    cfg = stream.config
    cur = stream.current()
    # restrict the peak search so both interpolation neighbours exist
    coarse = interpolate(cur, find_peak(cur, 1, cfg.bins - 2))
    f0 = coarse.frequency
    if band[0] <= f0 <= band[1]:
        d = nominal_delay(cfg.fs, f0)
    else:
        d = nominal_delay(cfg.fs, fallback_frequency or cfg.f_nominal)
    d = max(1, min(d, stream.capacity - 1))
    spectrum = complex_spectrum(cur, stream.delayed(d))
    return QsgResult(spectrum, d, coarse)


def split_images(tone: ToneEstimate, gains: DelayGains) -> tuple[complex, complex]:
    """Complex gains of the positive and negative images of the real tone
    behind ``tone`` inside the in-quadrature signal.

    ``tone`` was estimated on the complex-signal spectrum, so its image gain
    is ``(A/2)*e**(j*phi) * sigma_plus``; the negative image follows from the
    same amplitude and opposite phase scaled by ``sigma_minus``.
    """
    if abs(gains.sigma_plus) < 1e-6:
        raise QuadratureDegenerateError(
            f"positive-image gain ~0 at theta={gains.theta:.6f}"
        )
    v_plus = tone.image_gain
    v_minus = np.conj(v_plus / gains.sigma_plus) * gains.sigma_minus
    return complex(v_plus), complex(v_minus)


def td_sr(tone: ToneEstimate, gains: DelayGains, ks, config) -> np.ndarray:
    """Reconstruct the normalized in-quadrature spectrum of one real tone
    (both images) at the absolute bin indices ``ks``."""
    v_plus, v_minus = split_images(tone, gains)
    return (image_bins(v_plus, tone.frequency, ks, config)
            + image_bins(v_minus, -tone.frequency, ks, config))


def td_apc(tone: ToneEstimate, gains: DelayGains) -> ToneEstimate:
    """Undo the in-quadrature gain: convert a complex-signal tone estimate
    to the underlying real tone's amplitude and window-start phase."""
    sp = gains.sigma_plus
    if abs(sp) < 1e-6:
        raise QuadratureDegenerateError(
            f"positive-image gain ~0 at theta={gains.theta:.6f}"
        )
    return ToneEstimate(
        frequency=tone.frequency,
        amplitude=tone.amplitude / abs(sp),
        phase=wrap_phase(tone.phase - np.angle(sp)),
        k_m=tone.k_m,
        delta=tone.delta,
        epsilon=tone.epsilon,
    )
