"""Accuracy metrics and limit grading for phasor report streams.

Reports from an estimator are compared against the analytic ground truth
of the generating test condition, then graded against a class P / class M
limit table.  Steady conditions are graded on worst-case TVE/FE/RFE; step
conditions on response time, delay time and overshoot; ramp corners carry
logged transient exclusions.  Everything is evaluated exactly at the
reporting instants — estimates are never interpolated.
"""
from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .ipdft import wrap_phase
from .siggen import SignalKind, TestSignalSpec, ground_truth

_STEP_KINDS = (SignalKind.AMPLITUDE_STEP, SignalKind.PHASE_STEP)
_METRICS = ("tve", "fe", "rfe")


def tve(estimate, truth):
    """Total vector error in percent between complex phasor arrays."""
    est = np.asarray(estimate, dtype=complex)
    ref = np.asarray(truth, dtype=complex)
    mag = np.abs(ref)
    if np.any(mag == 0.0):
        raise ValueError("ground-truth phasor with zero amplitude")
    return 100.0 * np.abs(est - ref) / mag


def fe_rfe(est_frequency, est_rocof, true_frequency, true_rocof):
    """Absolute frequency error (Hz) and ROCOF error (Hz/s)."""
    fe = np.abs(np.asarray(est_frequency, float) - np.asarray(true_frequency, float))
    rfe = np.abs(np.asarray(est_rocof, float) - np.asarray(true_rocof, float))
    return fe, rfe


@dataclass(frozen=True)
class ErrorSeries:
    """Per-report errors, plus the raw estimates they were derived from."""

    timestamps: np.ndarray
    tve_pct: np.ndarray
    fe_hz: np.ndarray
    rfe_hzps: np.ndarray
    amplitude: np.ndarray
    phase: np.ndarray
    frequency: np.ndarray
    rocof: np.ndarray

    def __len__(self) -> int:
        return self.timestamps.size


def error_series(reports, spec: TestSignalSpec) -> ErrorSeries:
    """Grade a report stream against the truth of its generating condition.

    ``reports`` is any sequence whose items expose timestamp, amplitude,
    phase, frequency and rocof attributes, so the main estimator and the
    baseline produce interchangeable input.
    """
    if not reports:
        raise ValueError("no reports to grade")
    t = np.array([r.timestamp for r in reports])
    amp = np.array([r.amplitude for r in reports])
    ph = np.array([r.phase for r in reports])
    freq = np.array([r.frequency for r in reports])
    roc = np.array([r.rocof for r in reports])
    truth = ground_truth(spec, t)
    err_tve = tve(amp * np.exp(1j * ph), truth.phasor)
    err_f, err_r = fe_rfe(freq, roc, truth.frequency, truth.rocof)
    return ErrorSeries(t, err_tve, err_f, err_r, amp, ph, freq, roc)


# --- step metrics ----------------------------------------------------------------------


class UndefinedDelayError(ValueError):
    """The stepped estimate never crossed half of the step magnitude."""


@dataclass(frozen=True)
class StepMetrics:
    response_time_tve_s: float
    response_time_fe_s: float
    response_time_rfe_s: float
    delay_time_s: float
    overshoot_pct: float


def response_time(timestamps, errors, threshold, rate, window=None):
    """Length of the burst of reports above ``threshold``.

    Measured from the first offending report to the re-entry after the
    last one, i.e. ``(last - first + 1)`` reporting intervals; 0.0 when
    the series never exceeds.  ``window`` optionally restricts which
    reports can be attributed to the transient.
    """
    t = np.asarray(timestamps, float)
    e = np.asarray(errors, float)
    mask = e > threshold
    if window is not None:
        mask &= (t >= window[0]) & (t <= window[1])
    idx = np.flatnonzero(mask)
    if idx.size == 0:
        return 0.0
    return float(idx[-1] - idx[0] + 1) / rate


def crossing_time(timestamps, normalized):
    """First instant the normalized trajectory reaches 1/2, interpolated
    linearly between the straddling reports."""
    t = np.asarray(timestamps, float)
    y = np.asarray(normalized, float)
    above = np.flatnonzero(y >= 0.5)
    if above.size == 0:
        raise UndefinedDelayError("estimate never reached half the step")
    i = above[0]
    if i == 0:
        return float(t[0])
    frac = (0.5 - y[i - 1]) / (y[i] - y[i - 1])
    return float(t[i - 1] + frac * (t[i] - t[i - 1]))


def step_metrics(series: ErrorSeries, spec: TestSignalSpec, thresholds,
                 window, rate) -> StepMetrics:
    """Response, delay and overshoot metrics for one step record.

    The stepped quantity (amplitude or phase) is normalized by the known
    step magnitude, so the 50 % crossing and the overshoot read directly
    off the normalized trajectory.  Requires the step condition to run at
    nominal frequency, where the pre-step quantity is constant.
    """
    if spec.kind not in _STEP_KINDS:
        raise ValueError(f"not a step condition: {spec.kind.value}")
    if spec.f0 != spec.f_nominal:
        raise ValueError("step metrics need f0 == f_nominal")
    t = series.timestamps
    t_step = round(spec.step_time * spec.fs) / spec.fs
    win = (t_step + window[0], t_step + window[1])

    rt = {}
    for name, errors in (("tve", series.tve_pct), ("fe", series.fe_hz),
                         ("rfe", series.rfe_hzps)):
        rt[name] = response_time(t, errors, thresholds[name], rate, win)

    pre_mask = (t <= t_step - 0.08) & (t >= t_step - 0.48)
    if not pre_mask.any():
        raise ValueError("no pre-step steady reports to reference against")
    if spec.kind is SignalKind.AMPLITUDE_STEP:
        pre = float(np.median(series.amplitude[pre_mask]))
        y = (series.amplitude - pre) / (spec.step_amp * spec.amplitude)
    else:
        pre = float(np.median(series.phase[pre_mask]))
        y = wrap_phase(series.phase - pre) / spec.step_phase

    sel = (t >= t_step - 0.08) & (t <= win[1])
    delay = crossing_time(t[sel], y[sel]) - t_step

    settled = y[t >= t_step + 0.2]
    final = float(np.median(settled)) if settled.size else 1.0
    post = y[(t >= t_step) & (t <= win[1])]
    over = 100.0 * max(0.0, float(np.max(post)) - final) if post.size else 0.0

    return StepMetrics(rt["tve"], rt["fe"], rt["rfe"], float(delay), over)


# --- limit table -----------------------------------------------------------------------


class LimitTable:
    """Per-kind, per-class accuracy limits plus grading configuration.

    Pure configuration loaded from JSON; the packaged default encodes the
    class P and M values for a 50 Hz system reporting at 50 frames/s.
    """

    def __init__(self, data: dict):
        self.data = data
        for name, entries in data["classes"].items():
            for kind, entry in entries.items():
                if entry is None:
                    continue
                for key, value in entry.items():
                    if isinstance(value, (int, float)) and value <= 0:
                        raise ValueError(
                            f"non-positive limit {name}/{kind}/{key}")

    @classmethod
    def load(cls, path=None) -> "LimitTable":
        if path is None:
            text = resources.files("tdipdft").joinpath(
                "data/limits.json").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        return cls(json.loads(text))

    @property
    def reporting_rate(self) -> float:
        return float(self.data["reporting_rate_hz"])

    @property
    def step_thresholds(self) -> dict:
        raw = self.data["step_thresholds"]
        return {"tve": raw["tve_pct"], "fe": raw["fe_hz"],
                "rfe": raw["rfe_hzps"]}

    @property
    def step_window(self) -> tuple:
        lo, hi = self.data["step_attribution_window_s"]
        return float(lo), float(hi)

    def ramp_exclusion(self, metric: str) -> float:
        return float(self.data["ramp_exclusion_s"][metric])

    def limits_for(self, kind: SignalKind, pmu_class: str):
        """The limit entry for one condition kind, or None when the class
        does not prescribe that test at all."""
        return self.data["classes"][pmu_class].get(kind.value)

    def applicable(self, spec: TestSignalSpec, pmu_class: str) -> bool:
        """Whether the class's limits govern this particular condition
        (e.g. a 45 Hz carrier sits outside the class P frequency range)."""
        entry = self.limits_for(spec.kind, pmu_class)
        if entry is None:
            return False
        f_nom = spec.f_nominal
        if spec.kind is SignalKind.STEADY:
            return abs(spec.f0 - f_nom) <= entry["applicable_range_hz"] + 1e-9
        if spec.kind is SignalKind.HARMONIC:
            return spec.harmonic_ratio <= entry["max_distortion_ratio"] + 1e-12
        if spec.kind in (SignalKind.AMPLITUDE_MOD, SignalKind.PHASE_MOD):
            return spec.mod_frequency <= entry["max_mod_frequency_hz"] + 1e-12
        if spec.kind is SignalKind.RAMP:
            t2 = spec.ramp_stop if spec.ramp_stop is not None else spec.duration
            f_end = spec.f0 + spec.ramp_rate * (t2 - spec.ramp_start)
            span = entry["applicable_range_hz"] + 1e-9
            return (abs(spec.f0 - f_nom) <= span
                    and abs(f_end - f_nom) <= span)
        return True

    def tolerated_policy(self, kind: SignalKind, pmu_class: str, metric: str):
        for policy in self.data.get("tolerated", []):
            if (policy["kind"] == kind.value
                    and policy["pmu_class"] == pmu_class
                    and policy["metric"] == metric):
                return policy
        return None


# --- grading ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    pmu_class: str
    metric: str
    limit: float
    value: float
    timestamp: float | None = None
    tolerated: bool = False


@dataclass(frozen=True)
class Exclusion:
    metric: str
    start: float
    stop: float
    reason: str


@dataclass(frozen=True)
class ErrorReport:
    """Graded outcome of one test run."""

    label: str
    spec: TestSignalSpec
    series: ErrorSeries
    classes_checked: tuple
    max_tve_pct: float
    max_fe_hz: float
    max_rfe_hzps: float
    violations: tuple
    flagged: tuple
    exclusions: tuple
    step: StepMetrics | None = None

    @property
    def passed(self) -> bool:
        return not self.violations

    def included(self, metric: str) -> np.ndarray:
        """Boolean mask of reports that counted toward ``metric`` maxima."""
        t = self.series.timestamps
        mask = np.ones(t.size, dtype=bool)
        for exc in self.exclusions:
            if exc.metric == metric:
                mask &= ~((t >= exc.start) & (t <= exc.stop))
        return mask

    def summary(self) -> dict:
        return {
            "label": self.label,
            "kind": self.spec.kind.value,
            "passed": self.passed,
            "classes_checked": list(self.classes_checked),
            "max_tve_pct": self.max_tve_pct,
            "max_fe_hz": self.max_fe_hz,
            "max_rfe_hzps": self.max_rfe_hzps,
            "violations": [dataclasses.asdict(v) for v in self.violations],
            "flagged": [dataclasses.asdict(v) for v in self.flagged],
            "exclusions": [dataclasses.asdict(e) for e in self.exclusions],
            "step": dataclasses.asdict(self.step) if self.step else None,
            "spec": self.spec.to_dict(),
        }

    def write_json(self, path) -> None:
        Path(path).write_text(json.dumps(self.summary(), indent=2),
                              encoding="utf-8")

    def write_csv(self, path) -> None:
        s = self.series
        inc = {m: self.included(m) for m in _METRICS}
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("time,tve_pct,fe_hz,rfe_hzps,frequency,amplitude,"
                     "phase,rocof,included_tve,included_fe,included_rfe\n")
            for i in range(len(s)):
                fh.write(
                    f"{s.timestamps[i]:.6f},{s.tve_pct[i]:.9g},"
                    f"{s.fe_hz[i]:.9g},{s.rfe_hzps[i]:.9g},"
                    f"{s.frequency[i]:.9g},{s.amplitude[i]:.9g},"
                    f"{s.phase[i]:.9g},{s.rocof[i]:.9g},"
                    f"{int(inc['tve'][i])},{int(inc['fe'][i])},"
                    f"{int(inc['rfe'][i])}\n")


def _masked_worst(errors, t, mask):
    if not mask.any():
        return math.nan, None
    idx = np.flatnonzero(mask)
    j = idx[np.argmax(errors[idx])]
    return float(errors[j]), float(t[j])


def assess(reports, spec: TestSignalSpec, limits: LimitTable | None = None,
           classes=("P", "M"), label: str = "") -> ErrorReport:
    """Grade a report stream against the limit table.

    Classes whose applicability rules exclude the condition are skipped;
    the opening report never grades rocof (its backward difference has no
    predecessor); ramp corners get logged transient exclusions; step
    conditions are graded on response/delay/overshoot instead of steady
    maxima; and exceedances matching a tolerated policy are downgraded to
    flags.
    """
    if limits is None:
        limits = LimitTable.load()
    series = error_series(reports, spec)
    t = series.timestamps
    rate = limits.reporting_rate

    exclusions = []
    if t.size:
        # the stream opens with rocof pinned to zero (a backward difference
        # needs a predecessor), so the first stamp never grades rfe
        exclusions.append(Exclusion("rfe", float(t[0]), float(t[0]),
                                    "no rocof predecessor at first report"))
    if spec.kind is SignalKind.RAMP:
        t2 = spec.ramp_stop if spec.ramp_stop is not None else spec.duration
        for metric in _METRICS:
            half = limits.ramp_exclusion(metric)
            for corner in (spec.ramp_start, t2):
                exclusions.append(Exclusion(metric, corner - half,
                                            corner + half,
                                            "ramp corner transient"))
    step = None
    if spec.kind in _STEP_KINDS:
        step = step_metrics(series, spec, limits.step_thresholds,
                            limits.step_window, rate)
        t_step = round(spec.step_time * spec.fs) / spec.fs
        lo, hi = limits.step_window
        for metric in _METRICS:
            exclusions.append(Exclusion(metric, t_step + lo, t_step + hi,
                                        "step transient graded by response "
                                        "metrics"))

    report = ErrorReport(label or spec.kind.value, spec, series, (),
                         math.nan, math.nan, math.nan, (), (),
                         tuple(exclusions), step)
    masks = {m: report.included(m) for m in _METRICS}
    worst = {m: _masked_worst(e, t, masks[m])
             for m, e in (("tve", series.tve_pct), ("fe", series.fe_hz),
                          ("rfe", series.rfe_hzps))}

    checked, violations, flagged = [], [], []
    for pmu_class in classes:
        if not limits.applicable(spec, pmu_class):
            continue
        checked.append(pmu_class)
        entry = limits.limits_for(spec.kind, pmu_class)
        if spec.kind in _STEP_KINDS:
            pairs = (("response_time_tve", "response_time_tve_s",
                      step.response_time_tve_s),
                     ("response_time_fe", "response_time_fe_s",
                      step.response_time_fe_s),
                     ("response_time_rfe", "response_time_rfe_s",
                      step.response_time_rfe_s),
                     ("delay_time", "delay_time_s",
                      abs(step.delay_time_s)),
                     ("overshoot", "overshoot_pct", step.overshoot_pct))
            for metric, key, value in pairs:
                limit = entry[key]
                if value > limit:
                    violations.append(Violation(pmu_class, metric,
                                                limit, value))
            continue
        for metric, key in (("tve", "tve_pct"), ("fe", "fe_hz"),
                            ("rfe", "rfe_hzps")):
            limit = entry.get(key)
            if limit is None:
                continue
            value, when = worst[metric]
            if math.isnan(value) or value <= limit:
                continue
            hit = Violation(pmu_class, metric, limit, value, when)
            policy = limits.tolerated_policy(spec.kind, pmu_class, metric)
            if (policy is not None and spec.snr_db is not None
                    and spec.snr_db <= policy["max_snr_db"]
                    and value <= policy["headroom"] * limit):
                flagged.append(dataclasses.replace(hit, tolerated=True))
            else:
                violations.append(hit)

    return dataclasses.replace(
        report, classes_checked=tuple(checked),
        max_tve_pct=worst["tve"][0], max_fe_hz=worst["fe"][0],
        max_rfe_hzps=worst["rfe"][0], violations=tuple(violations),
        flagged=tuple(flagged))
