"""``loomkit`` command line: simulate, synth, loom.

Exit codes: 0 success, 1 domain or I/O failure, 2 usage error. Every failure
prints a single ``error[<Code>]: message`` line on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from . import simulator
from .errors import BadThresholds, ConfigError, LoomError
from .motion import MotionState
from .surface import PlanarPatch

EXIT_OK, EXIT_FAIL, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    code = "Usage"


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _emit(key, value, out=None):
    out = out or sys.stdout
    if isinstance(value, float):
        value = repr(value)
    print(f"{key}={value}", file=out)


def _read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None


def plane_from_dict(doc: dict) -> PlanarPatch:
    """Either three vertices ``a``, ``b``, ``c`` or ``normal`` plus ``offset``.

    With ``normal``/``offset`` the plane is ``normal . x = offset`` in camera
    axes (x forward, y left, z up).
    """
    try:
        if "normal" in doc:
            n = np.asarray(doc["normal"], dtype=float)
            norm = np.linalg.norm(n)
            if norm == 0:
                raise ConfigError("plane normal must be non-zero")
            n = n / norm
            base = n * float(doc["offset"])
            u = np.cross(n, [0.0, 0.0, 1.0])
            if np.linalg.norm(u) < 1e-6:
                u = np.cross(n, [0.0, 1.0, 0.0])
            u /= np.linalg.norm(u)
            w = np.cross(n, u)
            return PlanarPatch(base, base + u, base + w)
        return PlanarPatch(doc["a"], doc["b"], doc["c"])
    except KeyError as exc:
        raise ConfigError(f"plane description is missing {exc}") from None


def motion_from_dict(doc: dict) -> MotionState:
    try:
        return MotionState(doc["t"], doc.get("omega", (0.0, 0.0, 0.0)))
    except KeyError as exc:
        raise ConfigError(f"motion description is missing {exc}") from None


def _parse_thresholds(text):
    try:
        vals = [float(x) for x in text.split(",")]
    except ValueError:
        raise BadThresholds(f"thresholds must be numbers, got {text!r}") from None
    if len(vals) != 3:
        raise BadThresholds(f"expected three comma-separated thresholds, got {text!r}")
    from .flow.render import check_thresholds
    return check_thresholds(vals)


def cmd_simulate(args) -> int:
    if args.paper:
        cfg = simulator.reference_config(frame=args.frame or "world",
                                             omega_ij_degrees=args.omega_deg)
    else:
        cfg = simulator.load_config(args.config)
        if args.frame:
            cfg.frame = args.frame
    t0 = time.perf_counter()
    records = simulator.run(cfg)
    simulator.export_csv(records, args.out)
    _emit("interpretation", cfg.interpretation())
    _emit("samples", len(records))
    for k, v in simulator.peak_summary(records).items():
        _emit(k, float(v))
    _emit("elapsed_s", time.perf_counter() - t0)
    return EXIT_OK


def cmd_synth(args) -> int:
    from .flow import io as fio
    from .flow.pipeline import synth_flow
    plane = plane_from_dict(_read_json(args.plane))
    state = motion_from_dict(_read_json(args.motion))
    intr = fio.load_intrinsics(args.intrinsics)
    flow = synth_flow(plane, state, intr, args.dt)
    u = np.where(flow.valid, flow.u, 1e10)
    v = np.where(flow.valid, flow.v, 1e10)
    fio.write_flo(args.out, u, v)
    _emit("width", intr.width)
    _emit("height", intr.height)
    _emit("valid_pixels", int(flow.valid.sum()))
    return EXIT_OK


def cmd_loom(args) -> int:
    from .flow import io as fio
    from .flow.pipeline import estimate_looming, load_flo
    from .flow.render import render_threat_map
    thresholds = _parse_thresholds(args.thresholds) if args.thresholds else None
    if args.out_img and thresholds is None:
        raise UsageError("--out-img needs --thresholds")
    intr = fio.load_intrinsics(args.intrinsics)
    flow = load_flo(args.flow, args.dt)
    m = estimate_looming(flow, intr, mode=args.mode, prefilter=args.prefilter,
                         method=args.partials)
    if args.out_map:
        fio.write_grid_csv(args.out_map, m.L, m.valid)
    if args.out_img:
        render_threat_map(m, thresholds, args.out_img, zones=args.zones)
    vals = m.values()
    _emit("mode", m.provenance.name.lower())
    _emit("valid_pixels", int(vals.size))
    _emit("flagged_pixels", int(m.flagged.sum()))
    for p in (5, 25, 50, 75, 95):
        _emit(f"L_p{p:02d}", float(np.percentile(vals, p)) if vals.size else float("nan"))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="loomkit", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    s = sub.add_parser("simulate", help="run the 6-DOF looming simulator")
    src = s.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="simulation config JSON")
    src.add_argument("--paper", action="store_true", help="built-in reference scenario")
    s.add_argument("--out", required=True, help="output CSV")
    s.add_argument("--frame", choices=("world", "body"), help="frame of the motion functions")
    s.add_argument("--omega-deg", action="store_true",
                   help="read the reference rotation's i, j coefficients as deg/s")
    s.set_defaults(func=cmd_simulate)

    y = sub.add_parser("synth", help="write the flow of a plane under rigid motion")
    y.add_argument("--plane", required=True)
    y.add_argument("--motion", required=True)
    y.add_argument("--intrinsics", required=True)
    y.add_argument("--dt", type=float, required=True)
    y.add_argument("--out", required=True)
    y.set_defaults(func=cmd_synth)

    m = sub.add_parser("loom", help="per-pixel looming from a flow file")
    m.add_argument("--flow", required=True)
    m.add_argument("--intrinsics", required=True)
    m.add_argument("--dt", type=float, required=True)
    m.add_argument("--mode", choices=("est1", "est2", "avg"), default="avg")
    m.add_argument("--out-map", help="CSV grid of L (nan where invalid)")
    m.add_argument("--out-img", help="threat map PPM")
    m.add_argument("--thresholds", help="L1,L2,L3 in 1/s, strictly increasing")
    m.add_argument("--zones", action="store_true", help="quantise the red channel by zone")
    m.add_argument("--prefilter", action="store_true", help="3x3 box filter on the rates")
    m.add_argument("--partials", choices=("jacobian", "axis"), default="jacobian")
    m.set_defaults(func=cmd_loom)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except (UsageError, BadThresholds) as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except LoomError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except OSError as exc:
        print(f"error[IoError]: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
