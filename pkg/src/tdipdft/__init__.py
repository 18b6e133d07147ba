"""Streaming synchrophasor estimation via delayed in-quadrature
interpolated DFT, with out-of-band interference compensation."""

from .spectral import (
    WindowConfig,
    SpectrumSlice,
    SlidingSpectrum,
    dirichlet_kernel,
    hann_kernel,
    window_in_freq,
    complex_spectrum,
    delayed_spectrum,
    InsufficientHistoryError,
    ConfigMismatchError,
)
from .ipdft import ToneEstimate, NoToneError, interpolate, find_peak
from .quadrature import QsgResult, DelayGains, delay_gains, nominal_delay, td_qsg
from .estimator import (
    EstimatorConfig,
    PhasorEstimate,
    TdIpdftEstimator,
    WindowEstimate,
    estimate_window,
)
from .siggen import SignalKind, TestSignalSpec, ground_truth, synthesize
from .baselines import BaselineConfig, IIpdftEstimator
from .metrics import ErrorReport, LimitTable, Violation, assess, error_series
from .opcount import OpCountLedger, Tally, count_ops
from .harness import (
    Case,
    SuiteConfig,
    SuiteResult,
    calibrate_thresholds,
    compare_convergence,
    operation_report,
    run_suite,
    standard_suite,
    sweep_lambda_re,
)

__version__ = "0.1.0"

__all__ = [
    "WindowConfig",
    "SpectrumSlice",
    "SlidingSpectrum",
    "dirichlet_kernel",
    "hann_kernel",
    "window_in_freq",
    "complex_spectrum",
    "delayed_spectrum",
    "InsufficientHistoryError",
    "ConfigMismatchError",
    "ToneEstimate",
    "NoToneError",
    "interpolate",
    "find_peak",
    "QsgResult",
    "DelayGains",
    "delay_gains",
    "nominal_delay",
    "td_qsg",
    "EstimatorConfig",
    "PhasorEstimate",
    "TdIpdftEstimator",
    "WindowEstimate",
    "estimate_window",
    "SignalKind",
    "TestSignalSpec",
    "ground_truth",
    "synthesize",
    "BaselineConfig",
    "IIpdftEstimator",
    "ErrorReport",
    "LimitTable",
    "Violation",
    "assess",
    "error_series",
    "OpCountLedger",
    "Tally",
    "count_ops",
    "Case",
    "SuiteConfig",
    "SuiteResult",
    "calibrate_thresholds",
    "compare_convergence",
    "operation_report",
    "run_suite",
    "standard_suite",
    "sweep_lambda_re",
    "__version__",
]
