"""Command-line front end for the compliance harness.

Each subcommand optionally reads a JSON config file; any flag given on the
command line wins over the file value, which wins over the built-in default.
Grading commands (``run-suite``, ``calibrate``, ``count-ops``) exit nonzero
when their checks fail, so the tool can gate CI jobs directly.
"""
from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from .estimator import EstimatorConfig
from .harness import (
    SuiteConfig,
    calibrate_thresholds,
    compare_convergence,
    oobi_frequencies,
    operation_report,
    run_suite,
    sweep_lambda_re,
)
from .quadrature import td_qsg
from .siggen import TestSignalSpec, synthesize
from .spectral import SlidingSpectrum


def _load(path: str | None) -> dict:
    if not path:
        return {}
    try:
        cfg = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise SystemExit(f"cannot read config {path!r}: {exc}")
    if not isinstance(cfg, dict):
        raise SystemExit(f"config {path!r} must hold a JSON object")
    return cfg


def _pick(flag, file_cfg: dict, key: str, default):
    """Flag (if given) over config-file value over default."""
    if flag is not None:
        return flag
    return file_cfg.get(key, default)


def _estimator(file_cfg: dict, lambda_resid=None, q_max=None) -> EstimatorConfig:
    cfg = EstimatorConfig()
    overrides = dict(file_cfg.get("estimator", {}))
    if lambda_resid is not None:
        overrides["lambda_resid"] = lambda_resid
    if q_max is not None:
        overrides["q_max"] = q_max
    return replace(cfg, **overrides) if overrides else cfg


def _emit(summary: dict) -> None:
    print(json.dumps(summary, indent=2, sort_keys=True))


def _cmd_run_suite(args) -> int:
    file_cfg = _load(args.config)
    config = SuiteConfig(
        suite=_pick(args.suite, file_cfg, "suite", "std-full"),
        snr_db=tuple(_pick(args.snr, file_cfg, "snr_db", (60.0, 80.0))),
        seeds=tuple(int(s) for s in _pick(args.seeds, file_cfg, "seeds", (0,))),
        duration_scale=float(_pick(args.duration_scale, file_cfg,
                                   "duration_scale", 1.0)),
        estimator=_estimator(file_cfg),
        classes=tuple(_pick(args.classes, file_cfg, "classes", ("P", "M"))),
        output_dir=_pick(args.out, file_cfg, "output_dir", None),
        workers=int(_pick(args.workers, file_cfg, "workers", 0)),
    )
    result = run_suite(config)
    _emit(result.summary())
    return 0 if result.passed else 1


def _cmd_calibrate(args) -> int:
    file_cfg = _load(args.config)
    result = calibrate_thresholds(
        snr_db=tuple(_pick(args.snr, file_cfg, "snr_db", (60.0,))),
        seeds=tuple(int(s) for s in _pick(args.seeds, file_cfg,
                                          "seeds", (0, 1, 2))),
        duration=float(_pick(args.duration, file_cfg, "duration", 1.0)),
        estimator_config=_estimator(file_cfg),
        output_dir=_pick(args.out, file_cfg, "output_dir", None),
    )
    _emit(result.summary)
    return 0 if result.summary["separation_ok"] else 1


def _cmd_sweep(args) -> int:
    file_cfg = _load(args.config)
    lambdas = _pick(args.lambdas, file_cfg, "lambdas", None)
    seeds = _pick(args.seeds, file_cfg, "seeds", None)
    if seeds is None:
        seeds = range(int(_pick(args.runs, file_cfg, "runs", 200)))
    fi = _pick(args.fi, file_cfg, "interference_frequencies", (25.0,))
    f0 = _pick(args.f0, file_cfg, "fundamental_frequencies", (50.0,))
    if args.full_grid or file_cfg.get("full_grid"):
        fi = oobi_frequencies()
        f0 = (47.5, 50.0, 52.5)
    result = sweep_lambda_re(
        lambdas=tuple(float(v) for v in lambdas) if lambdas else None,
        q_values=tuple(int(q) for q in _pick(args.q, file_cfg,
                                             "q_values", (37, 200))),
        snr_db=float(_pick(args.snr, file_cfg, "snr_db", 60.0)),
        seeds=tuple(int(s) for s in seeds),
        duration=float(_pick(args.duration, file_cfg, "duration", 0.92)),
        interference_frequencies=tuple(float(v) for v in fi),
        interference_ratio=float(_pick(args.ratio, file_cfg,
                                       "interference_ratio", 0.1)),
        fundamental_frequencies=tuple(float(v) for v in f0),
        estimator_config=_estimator(file_cfg),
        output_dir=_pick(args.out, file_cfg, "output_dir", None),
    )
    _emit(result.summary)
    return 0


def _cmd_compare(args) -> int:
    file_cfg = _load(args.config)
    seeds = _pick(args.seeds, file_cfg, "seeds", None)
    if seeds is None:
        seeds = range(int(_pick(args.runs, file_cfg, "runs", 10)))
    fi = _pick(args.fi, file_cfg, "interference_frequencies", None)
    f0 = _pick(args.f0, file_cfg, "fundamental_frequencies",
               (47.5, 50.0, 52.5))
    result = compare_convergence(
        seeds=tuple(int(s) for s in seeds),
        snr_db=tuple(_pick(args.snr, file_cfg, "snr_db", (60.0, 80.0))),
        duration=float(_pick(args.duration, file_cfg, "duration", 0.92)),
        interference_frequencies=(tuple(float(v) for v in fi)
                                  if fi is not None else None),
        interference_ratio=float(_pick(args.ratio, file_cfg,
                                       "interference_ratio", 0.1)),
        fundamental_frequencies=tuple(float(v) for v in f0),
        tolerance=float(_pick(args.tolerance, file_cfg, "tolerance", 1.0)),
        estimator_config=_estimator(file_cfg),
        workers=int(_pick(args.workers, file_cfg, "workers", 0)),
        output_dir=_pick(args.out, file_cfg, "output_dir", None),
    )
    _emit({"tolerance": result.tolerance,
           "per_snr": {f"{snr:g}": {"baseline_level": result.baseline_level[snr],
                                    "reach": result.reach[snr],
                                    "baseline_reach": result.baseline_reach[snr],
                                    "saving": result.saving[snr]}
                       for snr in result.snr_db}})
    return 0 if all(r >= 0 for r in result.reach.values()) else 1


def _cmd_count_ops(args) -> int:
    file_cfg = _load(args.config)
    report = operation_report(
        q_saturated=int(_pick(args.q, file_cfg, "q_saturated", 37)),
        estimator_config=_estimator(file_cfg),
        output_dir=_pick(args.out, file_cfg, "output_dir", None),
    )
    _emit(report)
    ok = True
    for path in ("clean", "oobi_saturated"):
        entry = report[path]
        mapped = dict(entry["model"])
        for row in entry["mapping"]:
            mapped["simple"] += row["d_simple"]
            mapped["complex"] += row["d_complex"]
        ok &= entry["measured"]["simple"] == entry["model"]["simple"]
        ok &= entry["measured"]["complex"] == entry["model"]["complex"]
        ok &= mapped == entry["published"]
    return 0 if ok else 1


def _cmd_dump_spectrum(args) -> int:
    file_cfg = _load(args.config)
    sig = dict(file_cfg.get("signal", {}))
    if args.kind is not None:
        sig["kind"] = args.kind
    if args.f0 is not None:
        sig["f0"] = args.f0
    if args.snr is not None:
        sig["snr_db"] = args.snr
    if args.seed is not None:
        sig["noise_seed"] = args.seed
    sig.setdefault("kind", "steady")
    sig.setdefault("duration", 0.2)
    spec = TestSignalSpec.from_dict(sig)

    est_cfg = _estimator(file_cfg)
    wcfg = est_cfg.window
    if spec.fs != wcfg.fs:
        raise SystemExit(f"signal rate {spec.fs:g} != window rate {wcfg.fs:g}")
    at = float(_pick(args.at, file_cfg, "at", 0.04))
    end = int(round(at * wcfg.fs)) + wcfg.samples // 2
    x = synthesize(spec)
    if end >= x.size:
        raise SystemExit(f"stamp {at:g}s needs {end + 1} samples, signal has "
                         f"{x.size}")
    stream = SlidingSpectrum(wcfg, capacity=est_cfg.capacity)
    stream.extend(x[:end + 1])
    cur = stream.current()
    qsg = td_qsg(stream, band=est_cfg.coarse_band,
                 fallback_frequency=wcfg.f_nominal)

    lines = ["source,k,frequency_hz,re,im,magnitude"]
    for name, sl in (("window", cur), ("quadrature", qsg.spectrum)):
        z = sl.normalized()
        for i, v in enumerate(z):
            k = sl.k_start + i
            lines.append(f"{name},{k},{k * wcfg.delta_f:.9g},"
                         f"{v.real:.12g},{v.imag:.12g},{abs(v):.12g}")
    text = "\n".join(lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out} (stamp {at:g}s, delay {qsg.delay} samples, "
              f"coarse {qsg.coarse.frequency:.6g} Hz)")
    else:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tdipdft",
        description="Synchrophasor estimation compliance harness",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file (flags override it)")
        p.add_argument("--out", help="output directory / file")

    p = sub.add_parser("run-suite", help="run a test suite against the "
                                         "accuracy limits")
    common(p)
    p.add_argument("--suite", help="named suite (default std-full)")
    p.add_argument("--snr", nargs="+", type=float, help="noise levels in dB")
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--duration-scale", type=float, dest="duration_scale")
    p.add_argument("--classes", nargs="+", choices=("P", "M"))
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_run_suite)

    p = sub.add_parser("calibrate", help="collect detection-threshold "
                                         "separation data")
    common(p)
    p.add_argument("--snr", nargs="+", type=float)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--duration", type=float)
    p.set_defaults(func=_cmd_calibrate)

    p = sub.add_parser("sweep-stop-rule", help="sweep the residual-energy "
                                               "stop threshold")
    common(p)
    p.add_argument("--lambdas", nargs="+", type=float)
    p.add_argument("--q", nargs="+", type=int, help="iteration caps")
    p.add_argument("--snr", type=float)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--runs", type=int, help="seed count when --seeds not given")
    p.add_argument("--duration", type=float)
    p.add_argument("--fi", nargs="+", type=float, help="interferer frequencies")
    p.add_argument("--f0", nargs="+", type=float,
                   help="fundamental frequencies")
    p.add_argument("--full-grid", action="store_true",
                   help="sweep every interfering tone at all three "
                        "off-nominal fundamentals")
    p.add_argument("--ratio", type=float, help="interferer amplitude ratio")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("compare", help="convergence comparison against the "
                                       "fixed-iteration baseline")
    common(p)
    p.add_argument("--snr", nargs="+", type=float)
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--duration", type=float)
    p.add_argument("--fi", nargs="+", type=float,
                   help="interferer frequencies (default: whole "
                        "out-of-band grid)")
    p.add_argument("--f0", nargs="+", type=float,
                   help="fundamental frequencies")
    p.add_argument("--ratio", type=float)
    p.add_argument("--tolerance", type=float)
    p.add_argument("--workers", type=int)
    p.set_defaults(func=_cmd_compare)

    p = sub.add_parser("count-ops", help="operation-count ledgers vs the "
                                         "published budgets")
    common(p)
    p.add_argument("--q", type=int, help="saturated iteration count")
    p.set_defaults(func=_cmd_count_ops)

    p = sub.add_parser("dump-spectrum", help="windowed and in-quadrature "
                                             "spectra at one stamp")
    common(p)
    p.add_argument("--kind", help="signal kind (default steady)")
    p.add_argument("--f0", type=float)
    p.add_argument("--snr", type=float)
    p.add_argument("--seed", type=int)
    p.add_argument("--at", type=float, help="report stamp in seconds")
    p.set_defaults(func=_cmd_dump_spectrum)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
