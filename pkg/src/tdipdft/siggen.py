"""Test-signal synthesis with exact analytic ground truth.

Every disturbance class used by the compliance suite is generated from one
flat parameter record, so cases serialize cleanly to JSON and the reference
values (amplitude, phase, frequency, rate of change of frequency) come from
the same closed-form expressions that drive the sample synthesis.
"""
from __future__ import annotations

import dataclasses
import enum
import json
from dataclasses import dataclass

import numpy as np

from .ipdft import wrap_phase


class SignalKind(enum.Enum):
    STEADY = "steady"
    HARMONIC = "harmonic"
    INTERFERENCE = "interference"
    AMPLITUDE_MOD = "amplitude_mod"
    PHASE_MOD = "phase_mod"
    RAMP = "ramp"
    AMPLITUDE_STEP = "amplitude_step"
    PHASE_STEP = "phase_step"
    COMPOSITE = "composite"


@dataclass(frozen=True)
class TestSignalSpec:
    """One synthesizable test condition.

    Only the fields relevant to ``kind`` are consulted; the rest keep their
    neutral defaults, which keeps the record flat and trivially serializable.
    Ratios are relative to ``amplitude``; ``snr_db`` of ``None`` means
    noise-free.  For ``COMPOSITE``, the carrier follows ``base_kind`` and the
    interference fields add a second tone on top.
    """

    __test__ = False  # starts with "Test" but is not a pytest class

    kind: SignalKind = SignalKind.STEADY
    fs: float = 50_000.0
    f_nominal: float = 50.0
    duration: float = 2.0
    f0: float = 50.0
    amplitude: float = 1.0
    phase: float = 0.0
    # harmonic distortion
    harmonic_order: int = 2
    harmonic_ratio: float = 0.1
    harmonic_phase: float = 0.0
    # tone interference (also the overlay for COMPOSITE)
    interference_frequency: float = 25.0
    interference_ratio: float = 0.1
    interference_phase: float = 0.0
    # amplitude / phase modulation
    mod_frequency: float = 1.0
    mod_depth_amp: float = 0.1
    mod_depth_phase: float = np.pi / 18.0
    mod_phase: float = 0.0
    # linear frequency ramp between ramp_start and ramp_stop
    ramp_rate: float = 1.0
    ramp_start: float = 0.0
    ramp_stop: float | None = None
    # steps (sample-aligned at round(step_time * fs))
    step_time: float = 1.0
    step_amp: float = 0.1
    step_phase: float = np.pi / 18.0
    # composite carrier
    base_kind: SignalKind | None = None
    # additive white gaussian noise
    snr_db: float | None = None
    noise_seed: int = 0

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.fs))

    def times(self) -> np.ndarray:
        return np.arange(self.n_samples) / self.fs

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["kind"] = self.kind.value
        d["base_kind"] = self.base_kind.value if self.base_kind else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "TestSignalSpec":
        d = dict(d)
        d["kind"] = SignalKind(d["kind"])
        if d.get("base_kind"):
            d["base_kind"] = SignalKind(d["base_kind"])
        else:
            d["base_kind"] = None
        return cls(**d)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    @classmethod
    def from_json(cls, text: str) -> "TestSignalSpec":
        return cls.from_dict(json.loads(text))


@dataclass
class GroundTruth:
    """Reference phasor trajectory sampled at the requested times."""

    amplitude: np.ndarray
    phase: np.ndarray  # synchrophasor phase: total angle minus 2*pi*f_nominal*t
    frequency: np.ndarray
    rocof: np.ndarray

    @property
    def phasor(self) -> np.ndarray:
        return self.amplitude * np.exp(1j * self.phase)


def _ramp_clip(spec: TestSignalSpec, t: np.ndarray):
    t1 = spec.ramp_start
    t2 = spec.ramp_stop if spec.ramp_stop is not None else spec.duration
    if t2 < t1:
        raise ValueError("ramp_stop precedes ramp_start")
    tau = np.clip(t - t1, 0.0, t2 - t1)
    return tau, t1, t2


def _step_active(spec: TestSignalSpec, t: np.ndarray) -> np.ndarray:
    # align to the synthesis grid so truth and samples agree at the edge
    n_s = round(spec.step_time * spec.fs)
    return t >= (n_s - 0.5) / spec.fs


def _carrier_angle(spec: TestSignalSpec, t: np.ndarray) -> np.ndarray:
    """Total carrier angle (not wrapped, includes the nominal rotation)."""
    kind = spec.base_kind if spec.kind is SignalKind.COMPOSITE else spec.kind
    base = 2.0 * np.pi * spec.f0 * t + spec.phase
    if kind is SignalKind.PHASE_MOD:
        return base + spec.mod_depth_phase * np.cos(
            2.0 * np.pi * spec.mod_frequency * t + spec.mod_phase
        )
    if kind is SignalKind.RAMP:
        tau, t1, t2 = _ramp_clip(spec, t)
        hold = np.clip(t - t2, 0.0, None)
        return base + 2.0 * np.pi * spec.ramp_rate * (0.5 * tau * tau + tau * hold)
    if kind is SignalKind.PHASE_STEP:
        return base + spec.step_phase * _step_active(spec, t)
    return base


def _carrier_amplitude(spec: TestSignalSpec, t: np.ndarray) -> np.ndarray:
    kind = spec.base_kind if spec.kind is SignalKind.COMPOSITE else spec.kind
    a = np.full_like(t, spec.amplitude)
    if kind is SignalKind.AMPLITUDE_MOD:
        a *= 1.0 + spec.mod_depth_amp * np.cos(
            2.0 * np.pi * spec.mod_frequency * t + spec.mod_phase
        )
    elif kind is SignalKind.AMPLITUDE_STEP:
        a *= 1.0 + spec.step_amp * _step_active(spec, t)
    return a


def synthesize(spec: TestSignalSpec) -> np.ndarray:
    """Render the sample stream for one test condition."""
    kind = spec.kind
    if kind is SignalKind.COMPOSITE and (
        spec.base_kind is None or spec.base_kind is SignalKind.COMPOSITE
    ):
        raise ValueError("COMPOSITE needs a non-composite base_kind")
    t = spec.times()
    x = _carrier_amplitude(spec, t) * np.cos(_carrier_angle(spec, t))
    if kind is SignalKind.HARMONIC:
        x += spec.harmonic_ratio * spec.amplitude * np.cos(
            2.0 * np.pi * spec.harmonic_order * spec.f0 * t + spec.harmonic_phase
        )
    if kind in (SignalKind.INTERFERENCE, SignalKind.COMPOSITE):
        x += spec.interference_ratio * spec.amplitude * np.cos(
            2.0 * np.pi * spec.interference_frequency * t + spec.interference_phase
        )
    if spec.snr_db is not None:
        power = spec.amplitude**2 / 2.0
        sigma = np.sqrt(power * 10.0 ** (-spec.snr_db / 10.0))
        rng = np.random.default_rng(spec.noise_seed)
        x = x + rng.normal(0.0, sigma, x.size)
    return x


def ground_truth(spec: TestSignalSpec, times) -> GroundTruth:
    """Reference amplitude/phase/frequency/rocof of the fundamental at the
    given times (arbitrary, not restricted to the sample grid)."""
    t = np.atleast_1d(np.asarray(times, dtype=np.float64))
    kind = spec.base_kind if spec.kind is SignalKind.COMPOSITE else spec.kind

    amp = _carrier_amplitude(spec, t)
    angle = _carrier_angle(spec, t)
    phase = wrap_phase(angle - 2.0 * np.pi * spec.f_nominal * t)

    freq = np.full_like(t, spec.f0)
    rocof = np.zeros_like(t)
    if kind is SignalKind.PHASE_MOD:
        w = 2.0 * np.pi * spec.mod_frequency
        arg = w * t + spec.mod_phase
        freq = spec.f0 - spec.mod_depth_phase * spec.mod_frequency * np.sin(arg)
        rocof = -spec.mod_depth_phase * spec.mod_frequency * w * np.cos(arg)
    elif kind is SignalKind.RAMP:
        tau, t1, t2 = _ramp_clip(spec, t)
        freq = spec.f0 + spec.ramp_rate * tau
        rocof = np.where((t >= t1) & (t < t2), spec.ramp_rate, 0.0)
    return GroundTruth(amp, np.asarray(phase), freq, rocof)


def ground_truth_at(spec: TestSignalSpec, t: float):
    """Scalar (amplitude, phase, frequency, rocof) at one instant."""
    g = ground_truth(spec, [t])
    return float(g.amplitude[0]), float(g.phase[0]), float(g.frequency[0]), \
        float(g.rocof[0])


def write_csv(path, spec: TestSignalSpec) -> None:
    """Dump samples as ``index,time,value`` rows (header included)."""
    x = synthesize(spec)
    t = spec.times()
    with open(path, "w") as fh:
        fh.write("index,time,value\n")
        for i, (ti, xi) in enumerate(zip(t, x)):
            fh.write(f"{i},{ti:.9f},{xi:.12g}\n")


def write_f64(path, spec: TestSignalSpec) -> None:
    """Dump samples as raw little-endian float64."""
    synthesize(spec).astype("<f8").tofile(path)
