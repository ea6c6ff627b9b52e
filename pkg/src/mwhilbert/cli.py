"""Command-line interface.

Subcommands::

    model         magnitude / phase / group delay of a unit or cascade (or a .s2p file)
    characterize  rotated phase and transition bandwidth versus coupling
    transient     time-domain response of a unit to a switched-on carrier
    hilbert       principal-value quadrature against the rect/tri closed forms
    demo          edge detection, peak clipping or SSB with an ideal, model or .s2p device

Every flag can also be given in a YAML or JSON file passed with ``--config``;
command-line flags override the file. CSV files use GHz, ns and degrees.
Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O or data error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path
from typing import Any, Sequence

import numpy as np
import yaml

from . import applications as apps
from .characterization import DEFAULT_ALPHA, characterize_response, coupling_sweep
from .errors import DataError, MwHilbertError, NumericalError, ValidationError
from .hilbert import RECT, TRI, hilbert_pv_quadrature
from .resonator import CascadeSpec, CouplerResonatorParams, cascade_transfer, evaluate_phase
from .spectral import FrequencyGrid, group_delay, unwrap_phase
from .touchstone import read_touchstone, to_response
from .transient import default_dt, settle_time, steady_group_delay, steady_state, transient_simulate

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4

GHZ = 1e9
NS = 1e-9


# --- output helpers --------------------------------------------------------------


def _atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _fmt(v: float) -> str:
    return f"{float(v):.12g}"


def write_csv(path: Path, header: Sequence[str], columns: Sequence[Any]) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in zip(*columns):
        writer.writerow([_fmt(v) for v in row])
    _atomic_write(path, buf.getvalue())


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.floating, float)):
        v = float(value)
        return v if math.isfinite(v) else str(v)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.bool_):
        return bool(value)
    return value


def write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n")


def _config_echo(args: argparse.Namespace) -> dict:
    return {k: v for k, v in sorted(vars(args).items()) if k not in ("func", "config")}


# --- shared option groups ----------------------------------------------------------------


def _add_device_options(p: argparse.ArgumentParser, coupling: float, units: int) -> None:
    p.add_argument("--coupling", type=float, default=coupling, help="coupling magnitude |C| (default %(default)s)")
    p.add_argument("--center-ghz", type=float, default=10.0, help="center frequency f0 in GHz (default %(default)s)")
    p.add_argument("--loop-delay-ns", type=float, default=None, help="uncoupled loop delay (default 1.5/f0)")
    p.add_argument("--section-delay-ns", type=float, default=None, help="coupled-section delay (default 0.5/f0)")
    p.add_argument("--units", type=int, default=units, help="number of identical cascaded units (default %(default)s)")


def _check_device(args, problems: list[str], check_coupling: bool = True) -> None:
    if check_coupling and not 0.0 <= args.coupling <= 1.0:
        problems.append(f"--coupling must lie in [0, 1], got {args.coupling}")
    if not args.center_ghz > 0:
        problems.append(f"--center-ghz must be positive, got {args.center_ghz}")
    for name in ("loop_delay_ns", "section_delay_ns"):
        v = getattr(args, name)
        if v is not None and not v > 0:
            problems.append(f"--{name.replace('_', '-')} must be positive, got {v}")
    if args.units < 1:
        problems.append(f"--units must be at least 1, got {args.units}")


def _params(args, coupling: float | None = None) -> CouplerResonatorParams:
    return CouplerResonatorParams(
        coupling_mag=args.coupling if coupling is None else coupling,
        center_freq_hz=args.center_ghz * GHZ,
        loop_delay_s=None if args.loop_delay_ns is None else args.loop_delay_ns * NS,
        coupled_section_delay_s=None if args.section_delay_ns is None else args.section_delay_ns * NS,
    )


def _raise_problems(problems: list[str]) -> None:
    if problems:
        raise ValidationError("invalid configuration:\n  - " + "\n  - ".join(problems))


# --- model ------------------------------------------------------------------------------


def _model_parser(sub) -> None:
    p = sub.add_parser("model", help="magnitude, phase and group delay versus frequency")
    _add_device_options(p, coupling=0.3, units=1)
    p.add_argument("--f-lo-ghz", type=float, default=None, help="band start (default 0.7 f0)")
    p.add_argument("--f-hi-ghz", type=float, default=None, help="band stop (default 1.3 f0)")
    p.add_argument("--points", type=int, default=2001, help="initial number of samples (default %(default)s)")
    p.add_argument("--touchstone", default=None, help="use S21 from this .s2p file instead of the model")
    p.set_defaults(func=cmd_model)


def cmd_model(args) -> dict:
    problems: list[str] = []
    _check_device(args, problems)
    if args.points < 3:
        problems.append(f"--points must be at least 3, got {args.points}")
    f0 = args.center_ghz * GHZ
    lo = (args.f_lo_ghz * GHZ) if args.f_lo_ghz is not None else 0.7 * f0
    hi = (args.f_hi_ghz * GHZ) if args.f_hi_ghz is not None else 1.3 * f0
    if not 0 <= lo < hi:
        problems.append(f"band must satisfy 0 <= f-lo < f-hi, got [{lo / GHZ}, {hi / GHZ}] GHz")
    _raise_problems(problems)

    if args.touchstone:
        record = read_touchstone(args.touchstone)
        if args.f_lo_ghz is None and args.f_hi_ghz is None:
            lo, hi = record.frequencies_hz[0], record.frequencies_hz[-1]
        response = to_response(record, (lo, hi), args.points)
        phase = unwrap_phase(response)
    else:
        model = CascadeSpec.identical(_params(args), args.units)
        grid = FrequencyGrid.from_band(lo, hi, args.points)
        response, phase = evaluate_phase(model, grid)
    f_ghz = response.frequencies / GHZ
    out = Path(args.out)
    write_csv(out / "magnitude.csv", ["frequency_GHz", "magnitude_dB"], [f_ghz, 20 * np.log10(np.maximum(response.magnitude, 1e-300))])
    write_csv(out / "phase.csv", ["frequency_GHz", "phase_deg"], [f_ghz, phase.degrees])
    write_csv(out / "group_delay.csv", ["frequency_GHz", "group_delay_ns"], [f_ghz, group_delay(phase) / NS])
    summary = {"samples": int(response.grid.count), "step_GHz": response.grid.step_hz / GHZ}
    write_json(out / "model.json", {"config": _config_echo(args), "summary": summary})
    return summary


# --- characterize ----------------------------------------------------------------------------


def default_couplings() -> list[float]:
    """Nineteen couplings from 0.05 to 0.95 plus the design points 0.71 and 0.87."""
    grid = np.round(np.linspace(0.05, 0.95, 19), 10).tolist()
    return sorted(set(grid) | {0.71, 0.87})


def _characterize_parser(sub) -> None:
    p = sub.add_parser("characterize", help="rotated phase / transition bandwidth trade-off sweep")
    _add_device_options(p, coupling=0.71, units=1)
    p.add_argument("--couplings", type=float, nargs="+", default=None, help="coupling values to sweep")
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA, help="slope-departure factor (default %(default)s)")
    p.add_argument("--points", type=int, default=2001, help="samples on 0.7-1.3 f0 (default %(default)s)")
    p.add_argument("--touchstone", default=None, help="characterize S21 from this .s2p file instead")
    p.add_argument("--format", choices=("csv", "json"), default="csv", help="trade-off table format")
    p.set_defaults(func=cmd_characterize)


def cmd_characterize(args) -> dict:
    problems: list[str] = []
    _check_device(args, problems, check_coupling=False)
    couplings = args.couplings if args.couplings is not None else default_couplings()
    bad = [c for c in couplings if not 0.0 < c < 1.0]
    if bad and not args.touchstone:
        problems.append(f"couplings must lie strictly inside (0, 1), got {bad}")
    if not args.alpha > 0:
        problems.append(f"--alpha must be positive, got {args.alpha}")
    if args.points < 201:
        problems.append(f"--points must be at least 201, got {args.points}")
    _raise_problems(problems)

    f0 = args.center_ghz * GHZ
    if args.touchstone:
        record = read_touchstone(args.touchstone)
        grid = FrequencyGrid.snapped(f0, 0.7, 1.3, args.points)
        reports = [characterize_response(to_response(record, grid=grid), f0, args.alpha)]
    else:
        reports = coupling_sweep(couplings, _params(args, couplings[0]), args.alpha, args.points)
    header = [
        "coupling",
        "rotated_phase_deg",
        "transition_bandwidth_GHz",
        "relative_transition_bandwidth",
        "omega_L_GHz",
        "omega_R_GHz",
        "peak_group_delay_ns",
        "half_delay_bandwidth_GHz",
    ]
    columns = [
        [math.nan if r.coupling_mag is None else r.coupling_mag for r in reports],
        [r.rotated_phase_deg for r in reports],
        [r.transition_bandwidth_hz / GHZ for r in reports],
        [r.relative_transition_bandwidth for r in reports],
        [r.omega_L_hz / GHZ for r in reports],
        [r.omega_R_hz / GHZ for r in reports],
        [r.peak_delay_s / NS for r in reports],
        [r.half_delay_bandwidth_hz / GHZ for r in reports],
    ]
    out = Path(args.out)
    meta = {"config": _config_echo(args), "alpha": args.alpha, "columns": header}
    if args.format == "csv":
        write_csv(out / "tradeoff.csv", header, columns)
    else:
        meta["rows"] = [dict(zip(header, row)) for row in zip(*columns)]
    write_json(out / "tradeoff.json", meta)
    return {"rows": len(reports), "alpha": args.alpha}


# --- transient ---------------------------------------------------------------------------------


def _transient_parser(sub) -> None:
    p = sub.add_parser("transient", help="flow-graph transient simulation of one unit")
    _add_device_options(p, coupling=0.5, units=1)
    p.add_argument("--couplings", type=float, nargs="+", default=None, help="several couplings (overrides --coupling)")
    p.add_argument("--drive-ghz", type=float, default=None, help="drive frequency (default f0)")
    p.add_argument("--duration-ns", type=float, default=None, help="simulated time (default 12x the group delay)")
    p.set_defaults(func=cmd_transient)


def cmd_transient(args) -> dict:
    problems: list[str] = []
    couplings = args.couplings if args.couplings is not None else [args.coupling]
    args.coupling = couplings[0]
    _check_device(args, problems)
    bad = [c for c in couplings if not 0.0 < c < 1.0]
    if bad:
        problems.append(f"couplings must lie strictly inside (0, 1), got {bad}")
    if args.units != 1:
        problems.append("the transient simulator models a single unit (--units 1)")
    if args.drive_ghz is not None and not args.drive_ghz > 0:
        problems.append(f"--drive-ghz must be positive, got {args.drive_ghz}")
    if args.duration_ns is not None and not args.duration_ns > 0:
        problems.append(f"--duration-ns must be positive, got {args.duration_ns}")
    _raise_problems(problems)

    out = Path(args.out)
    metrics = []
    for c in couplings:
        params = _params(args, c)
        drive = args.drive_ghz * GHZ if args.drive_ghz is not None else params.center_freq_hz
        tau = steady_group_delay(params, drive)
        duration = args.duration_ns * NS if args.duration_ns is not None else 12 * tau
        signal = transient_simulate(params, drive, duration)
        ss = steady_state(signal, params, drive)
        settle = settle_time(signal, drive, ss.phasor)
        write_csv(out / f"transient_c{c:.4f}.csv", ["time_ns", "output"], [signal.times / NS, signal.samples])
        metrics.append(
            {
                "coupling": c,
                "drive_GHz": drive / GHZ,
                "dt_ns": default_dt(params) / NS,
                "group_delay_ns": tau / NS,
                "steady_amplitude": ss.amplitude,
                "steady_phase_deg": ss.phase_deg,
                "amplitude_error": ss.amplitude_error,
                "phase_error_deg": ss.phase_error_deg,
                "settle_time_ns": settle / NS,
            }
        )
    write_json(out / "metrics.json", {"config": _config_echo(args), "runs": metrics})
    return {"runs": len(metrics)}


# --- hilbert -------------------------------------------------------------------------------------


def _hilbert_parser(sub) -> None:
    p = sub.add_parser("hilbert", help="principal-value quadrature vs closed forms")
    p.add_argument("--pulse", choices=("rect", "tri"), default="tri")
    p.add_argument("--times", type=float, nargs="+", default=[-5.0, -2.0, -0.5, 0.0, 0.5, 2.0, 5.0])
    p.add_argument("--epsilon", type=float, default=1e-2, help="initial exclusion half-width")
    p.set_defaults(func=cmd_hilbert)


def cmd_hilbert(args) -> dict:
    problems: list[str] = []
    if not args.epsilon > 0:
        problems.append(f"--epsilon must be positive, got {args.epsilon}")
    if args.pulse == "rect" and any(abs(t) == 1.0 for t in args.times):
        problems.append("the rectangle's transform has poles at |t| = 1; remove those times")
    _raise_problems(problems)
    pulse = RECT if args.pulse == "rect" else TRI
    t = np.asarray(args.times, dtype=float)
    closed = pulse.hilbert(t)
    pv = np.array([hilbert_pv_quadrature(pulse, ti, args.epsilon) for ti in t])
    out = Path(args.out)
    write_csv(out / "hilbert.csv", ["t_normalized", "closed_form", "pv_quadrature", "abs_difference"], [t, closed, pv, np.abs(pv - closed)])
    worst = float(np.max(np.abs(pv - closed)))
    write_json(out / "metrics.json", {"config": _config_echo(args), "max_abs_difference": worst})
    return {"max_abs_difference": worst}


# --- demo -----------------------------------------------------------------------------------------


def _demo_parser(sub) -> None:
    p = sub.add_parser("demo", help="edge / peak / ssb application pipelines")
    p.add_argument("app", choices=("edge", "peak", "ssb"))
    p.add_argument("--source", default="model", help="'ideal', 'model' or 'touchstone:<path>' (default %(default)s)")
    _add_device_options(p, coupling=0.71, units=2)
    p.add_argument("--pulse-width-ns", type=float, default=2.0)
    p.add_argument("--period-ns", type=float, default=4.0)
    p.add_argument("--periods", type=int, default=4)
    p.add_argument("--sample-rate-ghz", type=float, default=160.0)
    p.add_argument("--baseband", action="store_true", help="unmodulated pulse train (ideal source only)")
    p.add_argument("--tone-offset-ghz", type=float, default=0.5, help="ssb: tones at f0 -+ offset")
    p.add_argument("--sideband", choices=("upper", "lower"), default="upper")
    p.add_argument("--model-points", type=int, default=40001, help="model response samples on 0-2 f0")
    p.set_defaults(func=cmd_demo)


def _demo_device(args, f0: float):
    """Device callable/response and its bulk delay for the chosen source."""
    if args.source == "ideal":
        if args.app == "ssb":
            return "ideal", 0.0
        return (apps.ideal_hilbert if args.baseband else apps.centered_hilbert(f0)), 0.0
    if args.source == "model":
        grid = FrequencyGrid.from_band(0.0, 2 * f0, args.model_points)
        response = cascade_transfer(CascadeSpec.identical(_params(args), args.units), grid)
    else:
        record = read_touchstone(args.source.split(":", 1)[1])
        f = record.frequencies_hz
        response = to_response(record, (f[0], f[-1]), max(len(f), args.model_points))
    return response, apps.estimate_bulk_delay(response, f0)


def cmd_demo(args) -> dict:
    problems: list[str] = []
    _check_device(args, problems)
    if not (args.source in ("ideal", "model") or args.source.startswith("touchstone:")):
        problems.append(f"--source must be 'ideal', 'model' or 'touchstone:<path>', got {args.source!r}")
    if args.baseband and args.source != "ideal":
        problems.append("--baseband is only meaningful with --source ideal")
    if args.model_points < 3:
        problems.append("--model-points must be at least 3")
    f0 = args.center_ghz * GHZ
    fs = args.sample_rate_ghz * GHZ
    if args.app == "ssb":
        if not 0 < args.tone_offset_ghz < args.center_ghz:
            problems.append("--tone-offset-ghz must lie in (0, f0)")
        if not fs >= 8 * f0:
            problems.append("--sample-rate-ghz must be at least 8x the center frequency")
        _raise_problems(problems)
        train = None
    else:
        train = apps.ModulatedPulseTrain(
            "rect" if args.app == "edge" else "tri",
            0.0 if args.baseband else f0,
            args.pulse_width_ns * NS,
            args.period_ns * NS,
            args.periods,
            fs,
        )
        try:
            train.validate()
        except ValidationError as exc:
            problems.append(str(exc))
        _raise_problems(problems)

    device, bulk = _demo_device(args, f0)
    out = Path(args.out)
    metrics: dict[str, Any] = {"bulk_delay_ns": bulk / NS, "source": args.source}
    if args.app == "ssb":
        n = int(round(args.periods * args.period_ns * NS * fs))
        x = apps.two_tone(f0, args.tone_offset_ghz * GHZ, fs, n)
        delay = apps.calibrate_ssb_delay(x, device, args.sideband, f0, base_delay_s=bulk)
        result = apps.ssb_modulate(x, device, apps.SsbSpec(delay, args.sideband), f0)
        y = result.signal
        metrics.update(
            suppression_db=result.suppression_db,
            clipped=result.clipped,
            residual=result.residual,
            delay_branch_ns=delay / NS,
            warning=result.warning,
        )
    else:
        x = apps.generate_pulse_train(train)
        applied = apps.apply_device(device, x)
        y = applied.signal
        metrics["out_of_band_fraction"] = applied.out_of_band_fraction
        if args.app == "edge":
            metrics.update(apps.edge_detection_metric(x, y, train, bulk).to_dict())
        else:
            metrics.update(apps.peak_clipping_metric(x, y, train, bulk).to_dict())
    write_csv(out / "input.csv", ["time_ns", "input"], [x.times / NS, x.samples])
    write_csv(out / "output.csv", ["time_ns", "output"], [y.times / NS, np.real(y.samples)])
    write_json(out / "metrics.json", {"config": _config_echo(args), "metrics": metrics})
    return metrics


# --- entry point ----------------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mwhilbert", description=__doc__.split("\n\n")[0])
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", default=None, help="YAML or JSON file whose keys set flag defaults")
    common.add_argument("--out", default="out", help="output directory (default %(default)s)")
    sub = parser.add_subparsers(dest="command", required=True)
    real_add = sub.add_parser

    def add_parser(name, **kw):
        return real_add(name, parents=[common], **kw)

    sub.add_parser = add_parser
    for build in (_model_parser, _characterize_parser, _transient_parser, _hilbert_parser, _demo_parser):
        build(sub)
    return parser


def load_config(path: str) -> dict:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise DataError(f"cannot read config {path}: {exc}") from None
    try:
        data = yaml.safe_load(text) if not path.endswith(".json") else json.loads(text)
    except (yaml.YAMLError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot parse config {path}: {exc}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ValidationError(f"config {path} must hold a mapping of flag names to values")
    return {str(k).replace("-", "_"): v for k, v in data.items()}


def parse_args(argv: Sequence[str] | None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        config = load_config(args.config)
        sub = parser._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sub._actions}
        unknown = sorted(set(config) - known - {"command"})
        if unknown:
            raise ValidationError(f"unknown config keys for '{args.command}': {', '.join(unknown)}")
        # file values become defaults, so explicit flags still win
        sub.set_defaults(**{k: v for k, v in config.items() if k != "command"})
        args = parser.parse_args(argv)
    return args


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = parse_args(argv)
        summary = args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalError as exc:
        print(f"numerical error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_IO
    except MwHilbertError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    print(json.dumps(_jsonable(summary), sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
