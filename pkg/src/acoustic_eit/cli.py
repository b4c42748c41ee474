"""Command-line interface for simulations, pipelines, and diagnostics.

Exit codes: 0 success, 2 configuration/validation failure, 3 fit
non-convergence or rank deficiency. `oracle check` returns 1 when the
steady-state solver and the closed-form scattering model disagree beyond
tolerance (which would indicate a broken build, not a bad config).
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, RankError
from .experiments import (
    FORMATS,
    PROFILE_NAMES,
    export_csv,
    export_json,
    csv_text,
    json_text,
    export_result,
    paper_profile,
    resolve_config,
    result_text,
    run_experiment,
)
from .idt import IdtTransducer, acoustic_conductance, coupling_rate, detuning_parameter, idt_bandwidth
from .lindblad import weak_probe_deviation
from .poles import classify_regime
from .units import angular_to_hz, hz_to_angular

_ORACLE_TOLERANCE = 1e-3


def _add_run_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", metavar="PATH", help="JSON config file (overlays --profile)")
    parser.add_argument("--profile", choices=PROFILE_NAMES, help="built-in device profile")
    parser.add_argument("--seed", type=int, metavar="U64", help="override the config noise seed")
    parser.add_argument("--out", metavar="PATH", help="output file (default: print to stdout)")
    parser.add_argument("--format", choices=FORMATS, help="output format (default: config value)")


def _handle_sweep(args: argparse.Namespace) -> int:
    config = resolve_config(
        args.scheme,
        profile=args.profile,
        config_path=args.config,
        seed=args.seed,
        output_path=args.out,
        output_format=args.format,
    )
    result = run_experiment(config)
    if config.output_path:
        export_result(result, config.output_path)
        print(f"wrote {len(result.table)} rows to {config.output_path}")
    else:
        sys.stdout.write(result_text(result))
    return 0


def _handle_pipeline(args: argparse.Namespace) -> int:
    config = resolve_config(
        "linewidth-pipeline",
        profile=args.profile,
        config_path=args.config,
        seed=args.seed,
        output_path=args.out,
        output_format=args.format,
    )
    result = run_experiment(config)
    if config.output_path:
        export_result(result, config.output_path)
        print(f"wrote {len(result.table)} rows to {config.output_path}")
        line = result.summary["line_fit"]
        print(
            "gamma20_hz=%.17g gamma20_sigma_hz=%.17g"
            % (line["gamma20_hz"], line["gamma20_sigma_hz"])
        )
        print(
            "k_hz2_per_watt=%.17g k_sigma_hz2_per_watt=%.17g"
            % (line["k_hz2_per_watt"], line["k_sigma_hz2_per_watt"])
        )
        threshold_power = result.summary["threshold_power_dbm"]
        print(
            "threshold_rabi_hz=%.17g threshold_power_dbm=%s"
            % (
                result.summary["threshold_rabi_hz"],
                "none" if threshold_power is None else "%.17g" % threshold_power,
            )
        )
    else:
        sys.stdout.write(result_text(result))
    return 0


def _handle_classify(args: argparse.Namespace) -> int:
    try:
        decision = classify_regime(
            hz_to_angular(args.gamma10),
            hz_to_angular(args.gamma20),
            hz_to_angular(args.omega_c),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    print(f"regime={decision.regime.value}")
    print("threshold_rabi_hz=%.17g" % angular_to_hz(decision.threshold))
    return 0


def _handle_idt_response(args: argparse.Namespace) -> int:
    try:
        idt = IdtTransducer(
            pairs=args.pairs,
            omega_center=hz_to_angular(args.f_idt),
            k2=args.k2,
            capacitance=args.ct,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    f_min = args.f_min if args.f_min is not None else args.f_idt * (1.0 - 2.0 / args.pairs)
    f_max = args.f_max if args.f_max is not None else args.f_idt * (1.0 + 2.0 / args.pairs)
    if not (0.0 < f_min < f_max):
        raise ConfigError("need 0 < --f-min < --f-max")
    if args.count < 2:
        raise ConfigError("--count must be at least 2")
    freqs = np.linspace(f_min, f_max, args.count)
    omegas = hz_to_angular(freqs)
    rates = coupling_rate(idt, omegas)
    conductances = acoustic_conductance(idt, omegas)
    response = rates / idt.decay_peak
    columns = ("frequency_hz", "detuning_parameter", "response", "coupling_rate_hz", "conductance_s")
    rows = [
        {
            "frequency_hz": float(f),
            "detuning_parameter": float(detuning_parameter(idt, w)),
            "response": float(s),
            "coupling_rate_hz": angular_to_hz(float(r)),
            "conductance_s": float(g),
        }
        for f, w, s, r, g in zip(freqs, omegas, response, rates, conductances)
    ]
    summary = {
        "bandwidth_hz": angular_to_hz(idt_bandwidth(idt)),
        "peak_rate_hz": angular_to_hz(idt.decay_peak),
    }
    fmt = args.format or "csv"
    if args.out:
        if fmt == "csv":
            export_csv(columns, rows, args.out)
        else:
            export_json(columns, rows, args.out, summary=summary)
        print(f"wrote {len(rows)} rows to {args.out}")
        print("bandwidth_hz=%.17g peak_rate_hz=%.17g" % (summary["bandwidth_hz"], summary["peak_rate_hz"]))
    else:
        if fmt == "csv":
            sys.stdout.write(csv_text(columns, rows))
        else:
            sys.stdout.write(json_text(columns, rows, summary=summary))
    return 0


def _handle_oracle_check(args: argparse.Namespace) -> int:
    if args.grid_count < 2 or args.span_hz <= 0.0 or args.probe_rabi_hz <= 0.0:
        raise ConfigError("need --grid-count >= 2, --span-hz > 0, --probe-rabi-hz > 0")
    atom = paper_profile("control-sweep").atom.build()
    detunings = hz_to_angular(np.linspace(-args.span_hz, args.span_hz, args.grid_count))
    control_amplitudes = hz_to_angular(np.array([0.0, 6.1e6, 30.0e6]))
    report = weak_probe_deviation(
        atom,
        detunings,
        detunings,
        control_amplitudes,
        Omega_p=hz_to_angular(args.probe_rabi_hz),
    )
    print(f"points={report.points}")
    print("max_abs=%.3e max_rel=%.3e" % (report.max_abs, report.max_rel))
    if report.max_rel <= _ORACLE_TOLERANCE:
        print(f"oracle check passed: max relative deviation <= {_ORACLE_TOLERANCE:g}")
        return 0
    print(f"oracle check FAILED: max relative deviation > {_ORACLE_TOLERANCE:g}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="acoustic-eit",
        description="Simulate and analyze acoustic transparency spectra of a driven three-level atom.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    simulate = subparsers.add_parser("simulate", help="run a forward sweep")
    sim_sub = simulate.add_subparsers(dest="scheme", required=True)
    for scheme in ("control-sweep", "flux-sweep", "power-sweep"):
        sweep = sim_sub.add_parser(scheme, help=f"{scheme} simulation")
        _add_run_flags(sweep)
        sweep.set_defaults(handler=_handle_sweep, scheme=scheme)

    pipeline = subparsers.add_parser("pipeline", help="run an estimation pipeline")
    pipe_sub = pipeline.add_subparsers(dest="pipeline_name", required=True)
    linewidth = pipe_sub.add_parser("linewidth", help="dip fits, linewidth line, per-point drive strength")
    _add_run_flags(linewidth)
    linewidth.set_defaults(handler=_handle_pipeline)

    classify = subparsers.add_parser("classify", help="transparency regime for given rates")
    classify.add_argument("--gamma10", type=float, required=True, metavar="HZ",
                          help="probe-transition coherence rate / 2pi")
    classify.add_argument("--gamma20", type=float, required=True, metavar="HZ",
                          help="two-photon coherence rate / 2pi")
    classify.add_argument("--omega-c", type=float, required=True, metavar="HZ",
                          help="control Rabi frequency / 2pi")
    classify.set_defaults(handler=_handle_classify)

    idt = subparsers.add_parser("idt", help="transducer diagnostics")
    idt_sub = idt.add_subparsers(dest="idt_command", required=True)
    response = idt_sub.add_parser("response", help="frequency response table")
    response.add_argument("--np", dest="pairs", type=int, required=True, help="finger-pair count")
    response.add_argument("--f-idt", dest="f_idt", type=float, required=True, metavar="HZ",
                          help="transducer center frequency")
    response.add_argument("--k2", type=float, required=True, help="electromechanical coupling coefficient")
    response.add_argument("--ct", type=float, default=1.5e-13, metavar="F",
                          help="total capacitance (default 150 fF)")
    response.add_argument("--f-min", dest="f_min", type=float, metavar="HZ")
    response.add_argument("--f-max", dest="f_max", type=float, metavar="HZ")
    response.add_argument("--count", type=int, default=201)
    response.add_argument("--out", metavar="PATH")
    response.add_argument("--format", choices=FORMATS)
    response.set_defaults(handler=_handle_idt_response)

    oracle = subparsers.add_parser("oracle", help="internal consistency checks")
    oracle_sub = oracle.add_subparsers(dest="oracle_command", required=True)
    check = oracle_sub.add_parser("check", help="steady-state solver vs closed-form scattering")
    check.add_argument("--probe-rabi-hz", dest="probe_rabi_hz", type=float, default=1.0e4)
    check.add_argument("--grid-count", dest="grid_count", type=int, default=21)
    check.add_argument("--span-hz", dest="span_hz", type=float, default=50.0e6)
    check.set_defaults(handler=_handle_oracle_check)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConvergenceError, RankError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
