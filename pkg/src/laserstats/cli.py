"""Command-line front end.

Exit codes: 0 on success, 1 on a domain error (reported as JSON on stderr),
2 on a usage error.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .device import (
    PRESETS,
    DeviceParams,
    amperes_to_carriers,
    carriers_to_amperes,
    current_for_photon_number,
    load_device,
    preset,
    rate_residuals,
    steady_state,
    threshold_current,
    threshold_photon_number,
    threshold_transition_width,
)
from .errors import LaserStatsError
from .io import (
    build_metadata,
    open_sink,
    write_record,
    write_table,
    write_trajectory_csv,
)
from .noise import (
    Regime,
    adiabatic_validity_bound,
    asymptotic_noise_threshold,
    classify_regime,
    gain_fixed_noise_threshold,
    noise_report,
    noise_threshold_current,
    noise_threshold_photon,
    photon_variance_closed_form,
)
from .oracle import (
    GillespieConfig,
    MAX_EVENTS,
    default_langevin_config,
    LangevinConfig,
    simulate_gillespie,
    simulate_langevin,
    stats_report,
)
from .sweeps import COLUMNS, Grid, SweepSpec, figure1_data, figure2_data, run_sweep

DEVICE_ENV = "LASERSTATS_DEVICE"
HELP_WIDTH = 80


def _formatter(prog):
    return argparse.HelpFormatter(prog, width=HELP_WIDTH)


# -- shared option groups ---------------------------------------------------

def _add_device_options(parser):
    group = parser.add_argument_group(
        "device", f"one source at most; default is ${DEVICE_ENV}, then the reference preset"
    )
    source = group.add_mutually_exclusive_group()
    source.add_argument("--device", metavar="PATH", help="device-parameter JSON file")
    source.add_argument("--preset", choices=sorted(PRESETS), help="named device")
    source.add_argument("--beta", type=float, help="inline device: spontaneous emission factor")
    group.add_argument("--N-T", dest="N_T", type=float, help="inline device: transparency excitations")
    group.add_argument("--tau-sp", type=float, help="inline device: spontaneous lifetime (s)")
    group.add_argument("--tau-cav", type=float, help="inline device: cavity photon lifetime (s)")


def _add_output_options(parser, default_format):
    group = parser.add_argument_group("output")
    group.add_argument("-o", "--output", metavar="PATH", help="write here instead of stdout")
    group.add_argument("--format", choices=("csv", "json"), default=default_format,
                       help=f"report format (default {default_format})")
    group.add_argument("--no-metadata", action="store_true",
                       help="omit metadata, including the timestamp")


def _add_pump_options(parser, required, with_n_bar=False, relative=False):
    pump = parser.add_mutually_exclusive_group(required=required)
    pump.add_argument("--j", type=float, help="pump rate (carriers/s)")
    pump.add_argument("--current-mA", dest="current_mA", type=float, help="pump current (mA)")
    if relative:
        pump.add_argument("--j-over-jth", type=float, help="pump in units of the threshold current")
    if with_n_bar:
        pump.add_argument("--n-bar", type=float, help="stationary photon number")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="laserstats", formatter_class=_formatter,
        description="Steady state, threshold and photon-number noise of a "
                    "single-mode laser, with stochastic cross-checks.",
    )
    parser.add_argument("--version", action="version", version=f"laserstats {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def command(name, help_text, default_format="json"):
        p = sub.add_parser(name, help=help_text, description=help_text, formatter_class=_formatter)
        _add_device_options(p)
        _add_output_options(p, default_format)
        return p

    p = command("steady", "stationary excitation and photon numbers at one pump rate")
    _add_pump_options(p, required=True, relative=True)

    command("thresholds", "transparency photon number, threshold current and photon number")

    p = command("noise", "photon-number variance at one operating point")
    _add_pump_options(p, required=True, with_n_bar=True, relative=True)

    command("noise-threshold", "operating point where the variance is half the thermal limit")
    command("regime", "spontaneous-emission-factor regime and asymptotic noise thresholds")

    p = command("sweep", "evaluate a grid of operating points or devices", "csv")
    p.add_argument("--variable", choices=sorted(COLUMNS), default="pump_rate",
                   help="swept quantity (default pump_rate)")
    p.add_argument("--min", type=float, required=True, help="grid start")
    p.add_argument("--max", type=float, required=True, help="grid end")
    p.add_argument("--points", type=int, default=50, help="grid points (default 50)")
    p.add_argument("--spacing", choices=("linear", "log"), default="log",
                   help="grid spacing (default log)")
    p.add_argument("--columns", help="comma-separated output columns (default all)")
    p.add_argument("--relative", action="store_true",
                   help="pump grid in units of the threshold current")
    p.add_argument("--independent", action="store_true",
                   help="beta sweep: keep N_T and tau_cav fixed instead of the material constants")

    for name, text in (("fig1", "noise-threshold photon number against 1/beta"),
                       ("fig2", "noise-threshold current margin against 1/beta")):
        p = command(name, text, "csv")
        p.add_argument("--beta-min", type=float, default=1e-12, help="default 1e-12")
        p.add_argument("--beta-max", type=float, default=1e-1, help="default 1e-1")
        p.add_argument("--points", type=int, default=60, help="default 60")
        p.add_argument("--independent", action="store_true",
                       help="keep N_T and tau_cav fixed instead of the material constants")

    p = command("sim-langevin", "Euler-Maruyama simulation of the linearized fluctuations")
    p.add_argument("--n-bar", type=float, help="operating point (default: noise threshold)")
    p.add_argument("--steps", type=int, default=10**7, help="total steps (default 1e7)")
    p.add_argument("--dt", type=float, help="time step in s (default: automatic)")
    p.add_argument("--burn-in-steps", type=int, help="discarded steps (default: automatic)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--dump", metavar="PATH", help="write the trajectory as CSV")
    p.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend")

    p = command("sim-gillespie", "exact-event simulation of the rate equations")
    _add_pump_options(p, required=True, relative=True)
    p.add_argument("--t-max", type=float, required=True, help="simulated time (s)")
    p.add_argument("--burn-in", type=float, default=0.0, help="discarded time (s)")
    p.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    p.add_argument("--max-events", type=float, default=MAX_EVENTS,
                   help=f"event budget (default {MAX_EVENTS:g})")
    p.add_argument("--dump", metavar="PATH", help="write the trajectory as CSV")
    p.add_argument("--backend", choices=("numba", "numpy"), help="kernel backend")

    p = command("verify", "run the oracle checks, or the full acceptance suite", "csv")
    p.add_argument("--seed", type=int, default=7, help="random seed (default 7)")
    p.add_argument("--steps", type=int, default=10**7, help="Langevin steps (default 1e7)")
    p.add_argument("--acceptance", action="store_true",
                   help="run every acceptance criterion instead of the device checks")
    return parser


def full_help() -> str:
    """Top-level help followed by the help of every subcommand."""
    parser = build_parser()
    parts = [parser.format_help()]
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    for name, p in sub.choices.items():
        parts.append(f"==> {name}\n{p.format_help()}")
    return "\n".join(parts)


# -- helpers ----------------------------------------------------------------

def _device(args, parser) -> DeviceParams:
    inline = [args.N_T, args.tau_sp, args.tau_cav]
    if args.beta is not None:
        if any(v is None for v in inline):
            parser.error("--beta needs --N-T, --tau-sp and --tau-cav")
        return DeviceParams(args.beta, args.N_T, args.tau_sp, args.tau_cav)
    if any(v is not None for v in inline):
        parser.error("--N-T, --tau-sp and --tau-cav only go with --beta")
    if args.device:
        return load_device(args.device)
    if args.preset:
        return preset(args.preset)
    if os.environ.get(DEVICE_ENV):
        return load_device(os.environ[DEVICE_ENV])
    return PRESETS["reference"]


def _pump(args, params) -> float | None:
    if getattr(args, "j", None) is not None:
        return args.j
    if getattr(args, "current_mA", None) is not None:
        return amperes_to_carriers(args.current_mA * 1e-3)
    if getattr(args, "j_over_jth", None) is not None:
        return args.j_over_jth * threshold_current(params)
    return None


def _meta(args, params, **extra):
    if args.no_metadata:
        return None
    return build_metadata(params, **extra)


def _emit_record(args, record, meta):
    with open_sink(args.output) as out:
        write_record(out, record, meta, args.format)


def _emit_table(args, result, meta):
    if meta is not None:
        meta.update(result.metadata)
    with open_sink(args.output) as out:
        write_table(out, result.columns, result.rows, meta, args.format, result.failures)


# -- subcommands ------------------------------------------------------------

def cmd_steady(args, params):
    j = _pump(args, params)
    op = steady_state(params, j)
    dN, dn = rate_residuals(params, op.N_bar, op.n_bar, j)
    record = op.to_dict()
    record["residuals"] = {"dN_dt": dN, "dn_dt": dn}
    _emit_record(args, record, _meta(args, params))


def cmd_thresholds(args, params):
    j_th = threshold_current(params)
    record = {
        "n_T": params.n_t,
        "transparency_j": params.transparency_current,
        "j_th": j_th,
        "current_th_mA": carriers_to_amperes(j_th) * 1e3,
        "n_th": threshold_photon_number(params),
        "beta_I_th_uA": params.beta * carriers_to_amperes(j_th) * 1e6,
        "transition_width": threshold_transition_width(params),
    }
    _emit_record(args, record, _meta(args, params))


def cmd_noise(args, params):
    if args.n_bar is not None:
        record = noise_report(params, n_bar=args.n_bar)
    else:
        record = noise_report(params, j=_pump(args, params))
    _emit_record(args, record, _meta(args, params))


def cmd_noise_threshold(args, params):
    n_half = noise_threshold_photon(params)
    j_half, margin = noise_threshold_current(params)
    regime = classify_regime(params)
    record = {
        "n_half": n_half,
        "j_half": j_half,
        "current_half_mA": carriers_to_amperes(j_half) * 1e3,
        "j_th": threshold_current(params),
        "margin": margin,
        "ratio_at_n_half": photon_variance_closed_form(params, n_half).ratio,
        "regime": regime.value,
        "asymptote": asymptotic_noise_threshold(params, regime),
    }
    _emit_record(args, record, _meta(args, params))


def cmd_regime(args, params):
    record = {
        "regime": classify_regime(params).value,
        "adiabatic_bound": adiabatic_validity_bound(params),
        "stimulated_parameter": 2.0 * params.beta * gain_fixed_noise_threshold(params),
        "asymptotes": {r.value: asymptotic_noise_threshold(params, r) for r in Regime},
    }
    _emit_record(args, record, _meta(args, params))


def cmd_sweep(args, params):
    lo, hi = args.min, args.max
    if args.relative:
        if args.variable != "pump_rate":
            raise SystemExit(_usage_error("--relative only applies to pump_rate sweeps"))
        j_th = threshold_current(params)
        lo, hi = lo * j_th, hi * j_th
    columns = tuple(c.strip() for c in args.columns.split(",")) if args.columns else ()
    try:
        spec = SweepSpec(args.variable, Grid(lo, hi, args.points, args.spacing),
                         params, columns, covary=not args.independent)
    except ValueError as exc:
        raise SystemExit(_usage_error(str(exc))) from None
    _emit_table(args, run_sweep(spec), _meta(args, params))


def _figure(func):
    def cmd(args, params):
        try:
            grid = np.geomspace(args.beta_min, args.beta_max, args.points)
            result = func(grid, params, covary=not args.independent)
        except ValueError as exc:
            raise SystemExit(_usage_error(str(exc))) from None
        _emit_table(args, result, _meta(args, params))
    return cmd


def cmd_sim_langevin(args, params):
    n_bar = args.n_bar if args.n_bar is not None else noise_threshold_photon(params)
    config = default_langevin_config(params, n_bar, n_steps=args.steps, seed=args.seed)
    if args.dt is not None or args.burn_in_steps is not None:
        config = LangevinConfig(
            args.dt if args.dt is not None else config.dt, args.steps,
            args.burn_in_steps if args.burn_in_steps is not None else config.burn_in_steps,
            args.seed,
        )
    result = simulate_langevin(params, n_bar, config, backend=args.backend,
                               keep_trajectory=bool(args.dump))
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            write_trajectory_csv(fh, result.trajectory)
    closed = photon_variance_closed_form(params, n_bar)
    record = {
        "n_bar": n_bar,
        "ratio": result.ratio,
        "ratio_std_error": result.ratio_std_error,
        "closed_form_ratio": closed.ratio,
        "channels": stats_report(result),
    }
    _emit_record(args, record, _meta(args, params, seed=args.seed))


def cmd_sim_gillespie(args, params):
    j = _pump(args, params)
    config = GillespieConfig(args.t_max, args.burn_in, args.seed, max_events=args.max_events)
    result = simulate_gillespie(params, j, config, backend=args.backend,
                                keep_trajectory=bool(args.dump))
    if args.dump:
        with open(args.dump, "w", newline="") as fh:
            write_trajectory_csv(fh, result.trajectory)
    op = steady_state(params, j)
    record = {
        "j": j,
        "current_mA": carriers_to_amperes(j) * 1e3,
        "events": result.events,
        "ratio": result.ratio,
        "fano": result.fano,
        "steady_state": {"n_bar": op.n_bar, "N_bar": op.N_bar},
        "channels": stats_report(result),
    }
    _emit_record(args, record, _meta(args, params, seed=args.seed))


def cmd_verify(args, params):
    from . import verify

    if args.acceptance:
        checks = verify.acceptance_checks()
    else:
        checks = verify.preset_checks(params, args.seed, langevin_steps=args.steps)
    rows = [{"check": c.name, "status": "skip" if c.skipped else ("pass" if c.ok else "fail"),
             "detail": c.detail} for c in checks]
    meta = _meta(args, params, seed=args.seed)
    with open_sink(args.output) as out:
        write_table(out, ("check", "status", "detail"), rows, meta, args.format)
    for c in checks:
        print(c.line(), file=sys.stderr)
    return 0 if all(c.ok or c.skipped for c in checks) else 1


COMMANDS = {
    "steady": cmd_steady,
    "thresholds": cmd_thresholds,
    "noise": cmd_noise,
    "noise-threshold": cmd_noise_threshold,
    "regime": cmd_regime,
    "sweep": cmd_sweep,
    "fig1": _figure(figure1_data),
    "fig2": _figure(figure2_data),
    "sim-langevin": cmd_sim_langevin,
    "sim-gillespie": cmd_sim_gillespie,
    "verify": cmd_verify,
}


def _usage_error(message):
    print(f"laserstats: error: {message}", file=sys.stderr)
    return 2


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        params = _device(args, parser)
        code = COMMANDS[args.command](args, params)
    except LaserStatsError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return code or 0


if __name__ == "__main__":
    raise SystemExit(main())
