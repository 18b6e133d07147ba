"""Sliding windowed-DFT engine.

Maintains, per input sample, the first K+2 DFT bins of the most recent
N-sample window (bins -1..K, window-relative time indexing) through a
modulated sliding-DFT recursion, plus a ring of Hanning-windowed bin vectors
so that the spectrum of a *delayed* copy of the signal is a plain buffer
lookup: with window-relative indexing, the windowed DFT of x(n-d) over the
window ending at sample p equals the stored slice for sample p-d, with no
phase rotation.

The recursion keeps one complex accumulator per bin over the *modulated*
input (modulation table holds exact unit-magnitude factors, so the update
coefficient is exactly 1.0 and the recursion cannot diverge); bins are
demodulated to window-relative indexing on the fly.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ._backends import get_backend, set_backend  # noqa: F401  (re-exported)


class InsufficientHistoryError(RuntimeError):
    """A spectrum was requested for a window the stream has not (or no
    longer) got data for."""


class ConfigMismatchError(ValueError):
    """Slices from incompatible window configurations were combined."""


@dataclass(frozen=True)
class WindowConfig:
    """Analysis-window geometry shared by every spectral object.

    Parameters
    ----------
    fs : float
        Sampling rate in Hz.
    f_nominal : float
        Nominal power-system frequency in Hz.
    cycles : int
        Window length in nominal cycles; ``cycles * fs / f_nominal`` must be
        an integer number of samples.
    bins : int
        Number K of retained windowed bins (k = 0..K-1).  The raw layer keeps
        K+2 bins (k = -1..K) so the frequency-domain Hanning combination is
        exact for all retained bins.
    """

    fs: float = 50_000.0
    f_nominal: float = 50.0
    cycles: int = 3
    bins: int = 8

    def __post_init__(self):
        if self.fs <= 0 or self.f_nominal <= 0:
            raise ValueError("fs and f_nominal must be positive")
        if self.cycles < 1:
            raise ValueError("cycles must be >= 1")
        if self.bins < 8:
            raise ValueError("bins must be >= 8 (interference windows span k=0..7)")
        n_exact = self.cycles * self.fs / self.f_nominal
        if abs(n_exact - round(n_exact)) > 1e-9:
            raise ValueError(
                f"window must hold an integer number of samples, got {n_exact}"
            )

    @property
    def samples(self) -> int:
        """Window length N in samples."""
        return int(round(self.cycles * self.fs / self.f_nominal))

    @property
    def delta_f(self) -> float:
        """DFT bin spacing fs/N in Hz."""
        return self.fs / self.samples

    @property
    def hann_sum(self) -> float:
        """Sum of the periodic Hanning window, B = N/2 (the normalization
        that makes a unit tone's positive-image bin read A/2)."""
        return self.samples / 2.0


def dirichlet_kernel(offset, n_samples: int):
    """Rectangular-window DFT kernel at (fractional) bin offset.

    Equals ``sum_{i=0}^{N-1} exp(-2j*pi*offset*i/N)``, i.e.
    ``exp(-1j*pi*offset*(N-1)/N) * sin(pi*offset) / sin(pi*offset/N)``, with
    the removable singularity at offsets that are multiples of N evaluated to
    its limit N (exactly real there).  Vectorized over ``offset``.
    """
    x = np.asarray(offset, dtype=np.float64)
    n = float(n_samples)
    rem = np.remainder(x, n)
    on_multiple = (rem < 1e-9) | (rem > n - 1e-9)
    safe = np.where(on_multiple, 0.5, x)  # any non-singular placeholder
    ratio = np.sin(np.pi * safe) / np.sin(np.pi * safe / n)
    out = np.exp(-1j * np.pi * safe * (n - 1.0) / n) * ratio
    out = np.where(on_multiple, complex(n), out)
    if out.ndim == 0:
        return complex(out)
    return out


def hann_kernel(offset, n_samples: int):
    """Periodic-Hanning DFT kernel: the 3-term combination of Dirichlet
    kernels ``0.5*W(x) - 0.25*(W(x-1) + W(x+1))``.  Vanishes at every integer
    offset with |offset| >= 2; equals N/2 at offset 0."""
    x = np.asarray(offset, dtype=np.float64)
    return (
        0.5 * dirichlet_kernel(x, n_samples)
        - 0.25 * dirichlet_kernel(x - 1.0, n_samples)
        - 0.25 * dirichlet_kernel(x + 1.0, n_samples)
    )


@dataclass
class SpectrumSlice:
    """A contiguous run of DFT bins for one window position.

    ``bins[i]`` is the *unnormalized* bin for k = ``k_start + i``;
    dividing by ``normalization`` (the window sum B) puts a unit-amplitude
    tone's positive image at amplitude 1/2.  ``window_end`` is the absolute
    index of the last sample inside the window.
    """

    bins: np.ndarray
    window_end: int
    windowed: bool
    normalization: float
    k_start: int
    config: WindowConfig

    def normalized(self) -> np.ndarray:
        return self.bins / self.normalization

    def bin(self, k: int) -> complex:
        """Bin value for absolute bin index k."""
        i = k - self.k_start
        if not 0 <= i < len(self.bins):
            raise IndexError(f"bin {k} outside slice [{self.k_start}, "
                             f"{self.k_start + len(self.bins) - 1}]")
        return complex(self.bins[i])


def default_capacity(config: WindowConfig, f_min_support: float = 45.0,
                     margin: int = 6) -> int:
    """Delayed-slice ring size: the largest quarter-period delay the
    estimator may request (ceil(fs / (4 * f_min_support))) plus margin."""
    return int(math.ceil(config.fs / (4.0 * f_min_support))) + margin


class SlidingSpectrum:
    """Streaming spectrum of a real signal with delayed-slice retrieval.

    Push samples with :meth:`extend` / :meth:`push`; read the current
    windowed slice, the raw (rectangular) slice, or the windowed slice of the
    signal delayed by up to ``capacity - 1`` samples.
    """

    def __init__(self, config: WindowConfig | None = None,
                 capacity: int | None = None):
        self.config = config or WindowConfig()
        n = self.config.samples
        k = self.config.bins
        self.capacity = int(capacity) if capacity else default_capacity(self.config)
        if self.capacity < 1:
            raise ValueError("capacity must be >= 1")
        ks = np.arange(-1, k + 1)
        self._mu = np.exp(-2j * np.pi * ks[:, None] * np.arange(n)[None, :] / n)
        self._mu = np.ascontiguousarray(self._mu)
        self._x_ring = np.zeros(n, dtype=np.float64)
        self._acc = np.zeros(k + 2, dtype=np.complex128)
        self._w_ring = np.zeros((self.capacity, k), dtype=np.complex128)
        self._pushed = 0
        self._backend = get_backend()

    # -- ingestion ---------------------------------------------------------

    def push(self, sample: float) -> None:
        self.extend(np.array([sample], dtype=np.float64))

    def extend(self, samples) -> None:
        chunk = np.ascontiguousarray(samples, dtype=np.float64)
        if chunk.ndim != 1:
            raise ValueError("samples must be one-dimensional")
        self._pushed = self._backend.push_chunk(
            self._x_ring, self._acc, self._w_ring, self._mu, self._pushed, chunk
        )

    @property
    def samples_seen(self) -> int:
        return self._pushed

    def ready(self, delay: int = 0) -> bool:
        """True once a full window exists for the signal delayed by ``delay``."""
        return self._pushed - 1 - delay >= self.config.samples - 1

    # -- retrieval ---------------------------------------------------------

    def current_rect(self) -> SpectrumSlice:
        """Raw rectangular-window bins k = -1..K for the current window."""
        if not self.ready():
            raise InsufficientHistoryError(
                f"need {self.config.samples} samples, have {self._pushed}"
            )
        p = self._pushed - 1
        n = self.config.samples
        rect = self._acc * np.conj(self._mu[:, (p + 1) % n])
        return SpectrumSlice(rect, p, False, float(n), -1, self.config)

    def current(self) -> SpectrumSlice:
        """Hanning-windowed bins k = 0..K-1 for the current window."""
        return self.delayed(0)

    def delayed(self, delay: int) -> SpectrumSlice:
        """Hanning-windowed bins of the signal delayed by ``delay`` samples,
        over the current window position."""
        if not 0 <= delay < self.capacity:
            raise InsufficientHistoryError(
                f"delay {delay} outside ring capacity {self.capacity}"
            )
        p = self._pushed - 1 - delay
        if p < self.config.samples - 1:
            raise InsufficientHistoryError(
                f"window ending at sample {p} not yet complete"
            )
        bins = self._w_ring[p % self.capacity].copy()
        return SpectrumSlice(bins, self._pushed - 1, True,
                             self.config.hann_sum, 0, self.config)


def window_in_freq(rect: SpectrumSlice) -> SpectrumSlice:
    """Apply the periodic Hanning window in the frequency domain:
    bin(k) = 0.5*R(k) - 0.25*(R(k-1) + R(k+1)) over the K retained bins."""
    if rect.windowed:
        raise ValueError("slice is already windowed")
    if rect.k_start != -1:
        raise ValueError("raw slice must start at bin -1")
    r = rect.bins
    out = 0.5 * r[1:-1] - 0.25 * (r[:-2] + r[2:])
    return SpectrumSlice(out, rect.window_end, True,
                         rect.config.hann_sum, 0, rect.config)


def delayed_spectrum(stream: SlidingSpectrum, delay: int) -> SpectrumSlice:
    """Windowed slice of the stream's input delayed by ``delay`` samples."""
    return stream.delayed(delay)


def complex_spectrum(now: SpectrumSlice, delayed: SpectrumSlice) -> SpectrumSlice:
    """Spectrum of x(n) + j*x(n-d) assembled from two windowed slices of the
    real signal (linearity of the DFT)."""
    if now.config != delayed.config:
        raise ConfigMismatchError("slices come from different window configs")
    if not (now.windowed and delayed.windowed):
        raise ValueError("complex assembly requires windowed slices")
    if now.k_start != delayed.k_start or len(now.bins) != len(delayed.bins):
        raise ConfigMismatchError("slices cover different bin ranges")
    return SpectrumSlice(now.bins + 1j * delayed.bins, now.window_end, True,
                         now.normalization, now.k_start, now.config)
