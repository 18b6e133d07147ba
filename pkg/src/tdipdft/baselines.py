"""Reference estimators the streaming algorithm is compared against.

Both work directly on the real signal's windowed spectrum, without the
delayed in-quadrature construction:

* :func:`e_ipdft` — three-point interpolation enhanced by a few rounds of
  negative-image reconstruction and subtraction.
* :class:`IIpdftEstimator` — e-IpDFT plus an iterative out-of-band
  compensation loop with a single energy-ratio trigger and a *fixed*
  iteration count once triggered (no residual-energy stop rule).  It records
  the fundamental estimate after every iteration so convergence speed can be
  compared against the stop-rule-driven loop.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._backends import get_backend
from .spectral import SlidingSpectrum, SpectrumSlice, WindowConfig
from .ipdft import (
    ToneEstimate,
    find_peak,
    interpolate,
    image_bins,
    real_tone_bins,
    wrap_phase,
)
from .estimator import rocof


@dataclass(frozen=True)
class BaselineConfig:
    window: WindowConfig = field(default_factory=WindowConfig)
    reporting_rate: float = 50.0
    image_rounds: int = 2        # negative-image refinements inside e_ipdft
    trigger_ratio: float = 3.3e-3  # residual/total energy level that fires
    q_iterations: int = 37       # compensation iterations once triggered

    def __post_init__(self):
        stride = self.window.fs / self.reporting_rate
        if abs(stride - round(stride)) > 1e-9:
            raise ValueError("reporting interval must be a whole number of samples")

    @property
    def stride(self) -> int:
        return int(round(self.window.fs / self.reporting_rate))


def _as_slice(bins: np.ndarray, template: SpectrumSlice) -> SpectrumSlice:
    return SpectrumSlice(bins, template.window_end, True, 1.0, 0,
                         template.config)


def e_ipdft(slc: SpectrumSlice, rounds: int = 2,
            k_m: int | None = None) -> ToneEstimate:
    """Enhanced interpolation of a real tone.

    After the plain three-point estimate, reconstruct the tone's negative
    image, subtract it from the spectrum and re-interpolate; repeat
    ``rounds`` times.  ``k_m`` pins the peak bin (used when refining a known
    interferer); otherwise the peak is re-found on each round.
    """
    cfg = slc.config
    ks = np.arange(cfg.bins)
    x = slc.normalized()
    est = interpolate(slc, k_m if k_m is not None
                      else find_peak(slc, 1, cfg.bins - 2))
    for _ in range(rounds):
        neg = image_bins(np.conj(est.image_gain), -est.frequency, ks, cfg)
        cleaned = _as_slice(x - neg, slc)
        est = interpolate(cleaned, k_m if k_m is not None
                          else find_peak(cleaned, 1, cfg.bins - 2))
    return est


@dataclass(frozen=True)
class BaselineReport:
    """One report of the fixed-iteration comparison estimator."""

    timestamp: float
    frequency: float
    amplitude: float
    phase: float
    rocof: float
    iterations: int
    interference_detected: bool
    e_ratio: float
    window_end: int
    frequency_trace: tuple[float, ...]
    delta_trace: tuple[float, ...]

    @property
    def phasor(self) -> complex:
        return self.amplitude * np.exp(1j * self.phase)


def compensated_window(slc: SpectrumSlice, config: BaselineConfig):
    """Fundamental estimate with fixed-count out-of-band compensation.

    Returns ``(estimate, triggered, e_ratio, freq_trace, delta_trace)``; the
    traces list the fundamental estimate after the initial pass and after
    every compensation iteration.  Uses the compiled loop when the active
    backend provides one.
    """
    kernel = getattr(get_backend(), "compensated_window_kernel", None)
    if kernel is not None:
        return _compensated_window_compiled(kernel, slc, config)
    cfg = slc.config
    ks = np.arange(cfg.bins)
    x = slc.normalized()
    est = e_ipdft(slc, config.image_rounds)
    trace = [est]
    fund = real_tone_bins(est, ks, cfg)
    e_total = float(np.sum(np.abs(x) ** 2))
    e_resid = float(np.sum(np.abs(x - fund) ** 2))
    ratio = e_resid / e_total if e_total > 0 else 0.0
    triggered = ratio >= config.trigger_ratio
    if triggered:
        est_i: ToneEstimate | None = None
        for _ in range(config.q_iterations):
            resid = x - fund
            if est_i is not None:
                # carry the interferer's negative image forward: each pass
                # peels it off with the best estimate so far, so the
                # compensation sharpens as the loop runs instead of
                # restarting from the raw residual
                resid = resid - image_bins(np.conj(est_i.image_gain),
                                           -est_i.frequency, ks, cfg)
            mags = np.abs(resid).copy()
            mags[3] = -1.0
            k_c = int(np.argmax(mags))
            # anchor the fit inside the slice when the argmax hits an edge
            k_c = min(max(k_c, 1), cfg.bins - 2)
            est_i = interpolate(_as_slice(resid, slc), k_c)
            intf = real_tone_bins(est_i, ks, cfg)
            est = e_ipdft(_as_slice(x - intf, slc), config.image_rounds)
            fund = real_tone_bins(est, ks, cfg)
            trace.append(est)
    return (est, triggered, ratio,
            tuple(t.frequency for t in trace),
            tuple(t.delta for t in trace))


def _compensated_window_compiled(kernel, slc: SpectrumSlice,
                                 config: BaselineConfig):
    cfg = slc.config
    q = config.q_iterations
    freq_log = np.zeros(q + 1, dtype=np.float64)
    delta_log = np.zeros(q + 1, dtype=np.float64)
    out = np.zeros(10, dtype=np.float64)
    kernel(slc.normalized(), config.image_rounds, config.trigger_ratio, q,
           cfg.delta_f, cfg.samples, cfg.hann_sum, freq_log, delta_log, out)
    if out[9] != 0.0:
        from .ipdft import NoToneError

        raise NoToneError("interpolation bins carry no usable energy")
    est = ToneEstimate(out[0], out[1], out[2], int(out[4]), out[3],
                       int(out[5]))
    n_log = int(out[8]) + 1
    return (est, bool(out[6]), out[7],
            tuple(freq_log[:n_log]), tuple(delta_log[:n_log]))


class IIpdftEstimator:
    """Streaming front end for the comparison estimator.

    Mirrors the report grid of the main estimator (windows centred on the
    report timestamps) so results are comparable point for point.
    """

    def __init__(self, config: BaselineConfig | None = None):
        self.config = config or BaselineConfig()
        wcfg = self.config.window
        self.stream = SlidingSpectrum(wcfg, capacity=1)
        self._half = wcfg.samples // 2
        stride = self.config.stride
        first_end = wcfg.samples - 1
        self._report_index = max(0, -(-(first_end - self._half) // stride))
        self._prev_freq: float | None = None

    @property
    def next_report_time(self) -> float:
        return self._report_index / self.config.reporting_rate

    def process(self, samples) -> list[BaselineReport]:
        x = np.ascontiguousarray(samples, dtype=np.float64)
        out: list[BaselineReport] = []
        i = 0
        while i < x.size:
            end = self._report_index * self.config.stride + self._half
            need = end + 1 - self.stream.samples_seen
            if need > x.size - i:
                self.stream.extend(x[i:])
                break
            self.stream.extend(x[i:i + need])
            i += need
            out.append(self._report())
            self._report_index += 1
        return out

    def _report(self) -> BaselineReport:
        cfg = self.config
        wcfg = cfg.window
        t_r = self._report_index / cfg.reporting_rate
        slc = self.stream.current()
        est, triggered, ratio, freqs, deltas = compensated_window(slc, cfg)
        t0 = (slc.window_end - wcfg.samples + 1) / wcfg.fs
        phase = wrap_phase(
            est.phase
            + 2.0 * np.pi * est.frequency * (t_r - t0)
            - 2.0 * np.pi * wcfg.f_nominal * t_r
        )
        df = rocof(est.frequency, self._prev_freq, cfg.reporting_rate)
        self._prev_freq = est.frequency
        return BaselineReport(
            timestamp=t_r,
            frequency=est.frequency,
            amplitude=est.amplitude,
            phase=float(phase),
            rocof=df,
            iterations=len(freqs) - 1,
            interference_detected=triggered,
            e_ratio=ratio,
            window_end=slc.window_end,
            frequency_trace=freqs,
            delta_trace=deltas,
        )
