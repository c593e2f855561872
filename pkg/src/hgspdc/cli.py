"""Command-line entry point: ``hgspdc <command> [options]``.

Exit codes: 0 success, 2 bad arguments/config, 3 numeric range or
quadrature failure, 4 a built-in self-check failed.
"""
from __future__ import annotations

import argparse
import math
import re
import sys

import numpy as np

from . import entanglement as ent
from . import state_engineering as se
from .export import csv_text, emit, fmt, header, json_text, state_fields, amplitudes_csv, amplitudes_record
from .gaussian_modes import BeamGeometry, ModeIndex, angular_spectrum, hg_field
from .oracle import ConvergenceError, QuadratureSpec, SCHEMES, compare_closed_form
from .spdc_coeffs import (
    CALIBRATION,
    REFERENCE_CONFIG,
    CrystalConfig,
    PumpSpec,
    build_state,
    coeff_exact,
    coeff_thin,
    cumulative_probabilities,
    iter_keys,
    conservation_allowed,
)

EXIT_CONFIG = 2
EXIT_RANGE = 3
EXIT_SELFCHECK = 4

_UNITS = {"nm": 1e-9, "um": 1e-6, "µm": 1e-6, "μm": 1e-6, "mm": 1e-3, "cm": 1e-2, "m": 1.0}
_LENGTH_RE = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zµμ]+)\s*$")

# reported HG02 / HG20 amplitudes at 351 nm, 1 mm, 0.1 mm: (exact, thin)
REPORTED = {
    ((0, 2), (0, 0, 0, 2)): (0.042169, 0.042170),
    ((0, 2), (0, 1, 0, 1)): (0.059636, 0.059637),
    ((0, 2), (0, 2, 0, 0)): (0.042169, 0.042170),
    ((2, 0), (0, 0, 2, 0)): (0.042169, 0.042170),
    ((2, 0), (1, 0, 1, 0)): (0.059636, 0.059637),
    ((2, 0), (2, 0, 0, 0)): (0.042169, 0.042170),
}
REPORTED_RTOL = 2e-4


class SelfCheckFailed(Exception):
    pass


def parse_length(text: str) -> float:
    """'351nm' -> 3.51e-07. A unit suffix is mandatory."""
    match = _LENGTH_RE.match(str(text))
    if not match or match.group(2) not in _UNITS:
        raise argparse.ArgumentTypeError(f"length {text!r} needs a unit suffix (nm, um, mm, cm, m)")
    value = float(match.group(1)) * _UNITS[match.group(2)]
    if not value > 0:
        raise argparse.ArgumentTypeError(f"length {text!r} must be positive")
    return value


def parse_angle(text: str) -> float:
    """'30deg' or '0.5rad' or a bare number in radians."""
    t = str(text).strip()
    try:
        if t.endswith("deg"):
            return math.radians(float(t[:-3]))
        if t.endswith("rad"):
            return float(t[:-3])
        return float(t)
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None


def parse_superposition(text: str) -> PumpSpec:
    """'n,m,re,im;n,m,re,im' -> PumpSpec."""
    comps = []
    for part in filter(None, (p.strip() for p in text.split(";"))):
        fields = [f.strip() for f in part.split(",")]
        if len(fields) != 4:
            raise argparse.ArgumentTypeError(f"pump component {part!r} must be n,m,re,im")
        n, m = int(fields[0]), int(fields[1])
        comps.append((ModeIndex(n, m), complex(float(fields[2]), float(fields[3]))))
    try:
        return PumpSpec(tuple(comps))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


# ---------------------------------------------------------------------------

def _config(args) -> CrystalConfig:
    return CrystalConfig(length=args.length, pump_wavelength=args.lambda_p, pump_waist=args.w0p)


def _pump(args) -> PumpSpec:
    if args.pump_superpose is not None:
        if args.pump is not None:
            raise ValueError("use either --pump or --pump-superpose, not both")
        return args.pump_superpose
    n, m = args.pump if args.pump is not None else (0, 0)
    return PumpSpec.single(n, m)


def _single_pump(args) -> ModeIndex:
    pump = _pump(args)
    if not pump.is_single_mode():
        raise ValueError("this command needs a single pump mode (--pump n m)")
    return pump.modes[0]


def _config_fields(config: CrystalConfig) -> dict:
    return {"lambda_p_m": config.pump_wavelength, "w0p_m": config.pump_waist, "length_m": config.length,
            "A": config.focusing_parameter}


def cmd_coeffs(args) -> str:
    state = build_state(_config(args), _pump(args), args.max_order, args.method)
    if args.format == "text":
        return json_text({"command": "coeffs", **amplitudes_record(state, args.include_zeros)})
    return amplitudes_csv(state, args.include_zeros)


def cmd_table1(args) -> str:
    config = _config(args)
    rows, record, failures = [], [], []
    for (pump, key), (ref_exact, ref_thin) in REPORTED.items():
        exact = coeff_exact(config, pump, key)
        thin = coeff_thin(config, pump, key)
        jk, ut = f"{key[0]}{key[1]}", f"{key[2]}{key[3]}"
        rows.append((f"HG{pump[0]}{pump[1]}", sum(key), jk, ut, exact, exact**2, thin, thin**2))
        record.append({"pump": f"HG{pump[0]}{pump[1]}", "jk": jk, "ut": ut, "exact": exact, "thin": thin})
        if config == REFERENCE_CONFIG:
            for got, ref in ((exact, ref_exact), (thin, ref_thin)):
                if abs(got - ref) > REPORTED_RTOL * ref:
                    failures.append(f"HG{pump[0]}{pump[1]} {jk},{ut}: {got:.6e} vs {ref}")
    if args.format == "text":
        text = json_text({"command": "table1", "config": _config_fields(config),
                          "calibration_constant": CALIBRATION, "rows": record})
    else:
        cols = ("pump", "order", "jk", "ut", "exact", "exact_probability", "thin", "thin_probability")
        text = csv_text(header("table1", _config_fields(config)), cols, rows)
    if failures:
        raise SelfCheckFailed(text, "reported amplitude mismatch: " + "; ".join(failures))
    return text


def parse_methods(text: str) -> list[str]:
    methods = [m.strip() for m in text.split(",") if m.strip()]
    bad = [m for m in methods if m not in ("exact", "thin")]
    if bad or not methods:
        raise argparse.ArgumentTypeError(f"methods must be exact and/or thin, got {text!r}")
    return methods


def cmd_figure2(args) -> str:
    rows = []
    for w0p in args.widths:
        config = CrystalConfig(length=args.length, pump_wavelength=args.lambda_p, pump_waist=w0p)
        for method in args.methods:
            state = build_state(config, PumpSpec.single(0, 0), args.max_order, method)
            for order, p in enumerate(cumulative_probabilities(state)):
                rows.append((w0p, order, p, method))
    fields = {"lambda_p_m": args.lambda_p, "length_m": args.length, "pump": "0,0,1,0",
              "widths_m": ",".join(fmt(w) for w in args.widths), "max_order": args.max_order,
              "methods": ",".join(args.methods)}
    if args.format == "text":
        recs = [{"w0p": w, "order": o, "cumulative_probability": p, "method": m} for w, o, p, m in rows]
        return json_text({"command": "figure2", "config": fields, "calibration_constant": CALIBRATION,
                          "rows": recs})
    return csv_text(header("figure2", fields), ("w0p", "order", "cumulative_probability", "method"), rows)


def _density(args):
    state = build_state(_config(args), _pump(args), args.max_order, args.method)
    if args.postselect_first_order:
        state = ent.postselect(state, ent.first_order)
    else:
        state = state.normalized()
    rho = ent.reduce(state)
    verdict = ent.csb_entanglement_witness(rho)
    return state, rho, verdict


def _summary(rho, verdict, state) -> dict:
    parity = ent.parity_block_check(rho) if state.pump.is_single_mode() else None
    witness = "none" if verdict.witness is None else "-".join(f"{m.n}{m.m}" for m in verdict.witness)
    return {"trace": rho.trace, "purity": verdict.purity, "entangled": verdict.entangled,
            "witness": witness, "parity_blocks": parity}


def cmd_density(args) -> str:
    state, rho, verdict = _density(args)
    summary = _summary(rho, verdict, state)
    fields = state_fields(state)
    fields["basis"] = " ".join(f"{m.n}{m.m}" for m in rho.basis)
    fields.update(summary)
    is_complex = np.iscomplexobj(rho.matrix)
    rows = []
    for a in range(len(rho.basis)):
        for b in range(len(rho.basis)):
            v = rho.matrix[a, b]
            rows.append((a, b, float(v.real), float(v.imag)) if is_complex else (a, b, float(v)))
    if args.format == "text":
        return json_text({"command": "density", "config": state_fields(state), "calibration_constant": CALIBRATION,
                          "basis": [[m.n, m.m] for m in rho.basis], "summary": summary,
                          "F": [[str(x) if is_complex else float(x) for x in row] for row in rho.matrix]})
    cols = ("row", "col", "value_re", "value_im") if is_complex else ("row", "col", "value")
    return csv_text(header("density", fields), cols, rows)


def cmd_entangle_check(args) -> str:
    state, rho, verdict = _density(args)
    summary = _summary(rho, verdict, state)
    if args.format == "text":
        text = json_text({"command": "entangle-check", "config": state_fields(state),
                          "calibration_constant": CALIBRATION, "summary": summary})
    else:
        cols = ("trace", "purity", "entangled", "witness", "parity_blocks")
        text = csv_text(header("entangle-check", state_fields(state)), cols, [tuple(summary[c] for c in cols)])
    if not verdict.entangled or summary["parity_blocks"] is False:
        raise SelfCheckFailed(text, "entanglement check failed")
    return text


def _first_order_csv(command, fields, state: se.FirstOrderState) -> str:
    rows = [(f"HG{s.n}{s.m}", f"HG{i.n}{i.m}", a.real, a.imag) for s, i, a in state.rows()]
    return csv_text(header(command, fields), ("signal_mode", "idler_mode", "re", "im"), rows)


_SOURCE_ALIASES = {"hg00": "HG00_pump", "hg11": "HG11_pump", "hg00_pump": "HG00_pump", "hg11_pump": "HG11_pump"}


def cmd_bell(args) -> str:
    source = _SOURCE_ALIASES.get(args.source.lower())
    if source is None:
        raise ValueError(f"unknown source {args.source!r}; use hg00 or hg11")
    recipe = se.bell_recipe(args.target, source, _config(args))
    fidelity = recipe.fidelity()
    fields = {**_config_fields(_config(args)), "target": args.target, "source": source,
              "pipeline": recipe.describe(), "fidelity": fidelity, "purity": recipe.state.purity()}
    if args.format == "text":
        text = json_text({"command": "bell", "config": fields, "calibration_constant": CALIBRATION,
                          "state": [[f"HG{s.n}{s.m}", f"HG{i.n}{i.m}", a.real, a.imag]
                                    for s, i, a in recipe.state.rows()]})
    else:
        text = _first_order_csv("bell", fields, recipe.state)
    if fidelity < 1.0 - 1e-10:
        raise SelfCheckFailed(text, f"Bell fidelity {fidelity!r} below 1 - 1e-10")
    return text


def cmd_nonmax(args) -> str:
    config = _config(args)
    state = se.nonmax_pipeline(args.theta, args.phi, config)
    target = se.nonmax_target(args.theta, args.phi)
    err = float(np.max(np.abs(state.amplitudes - target.amplitudes)))
    ev = state.reduced_eigenvalues()
    fields = {**_config_fields(config), "theta_rad": args.theta, "phi_rad": args.phi,
              "pump": se.nonmax_pump(args.theta, args.phi).describe(),
              "reduced_eigenvalues": " ".join(fmt(e) for e in ev), "max_abs_deviation": err}
    if args.format == "text":
        text = json_text({"command": "nonmax", "config": fields, "calibration_constant": CALIBRATION,
                          "state": [[f"HG{s.n}{s.m}", f"HG{i.n}{i.m}", a.real, a.imag]
                                    for s, i, a in state.rows()]})
    else:
        text = _first_order_csv("nonmax", fields, state)
    if err > 1e-10:
        raise SelfCheckFailed(text, f"pipeline state deviates from target by {err:.3e}")
    return text


def cmd_oracle_compare(args) -> str:
    config = _config(args)
    pump = _single_pump(args)
    spec = QuadratureSpec(scheme=args.scheme, points_per_axis=args.points, target_rel_error=args.target_rel_error)
    rows = compare_closed_form(config, pump, args.max_order, spec, route=args.route,
                               include_forbidden=args.include_forbidden)
    failures = []
    for r in rows:
        if conservation_allowed(pump, r.key):
            if r.rel_diff >= args.tolerance:
                failures.append(r.key)
        elif abs(r.quadrature) >= 1e-8:
            failures.append(r.key)
    fields = {**_config_fields(config), "pump": f"{pump.n},{pump.m}", "max_order": args.max_order,
              "route": args.route, "scheme": spec.scheme, "points_per_axis": spec.points_per_axis,
              "tolerance": args.tolerance}
    table = [(*r.key, r.closed_form, r.quadrature, r.est_error, r.rel_diff) for r in rows]
    if args.format == "text":
        cols = ("j", "k", "u", "t", "closed_form", "quadrature", "est_error", "rel_diff")
        text = json_text({"command": "oracle-compare", "config": fields, "calibration_constant": CALIBRATION,
                          "rows": [dict(zip(cols, row)) for row in table]})
    else:
        cols = ("j", "k", "u", "t", "closed_form", "quadrature", "est_error", "rel_diff")
        text = csv_text(header("oracle-compare", fields), cols, table)
    if failures:
        raise SelfCheckFailed(text, f"oracle mismatch for keys {failures}")
    return text


def cmd_mode_grid(args) -> str:
    n, m = args.mode
    geom = BeamGeometry(args.wavelength, args.waist)
    if args.spectrum:
        half = args.extent / geom.waist
        label = ("qx", "qy")
        axis = np.linspace(-half, half, args.points)
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        vals = angular_spectrum((n, m), geom, X, Y, args.z)
    else:
        half = args.extent * geom.waist
        label = ("x", "y")
        axis = np.linspace(-half, half, args.points)
        X, Y = np.meshgrid(axis, axis, indexing="ij")
        vals = hg_field((n, m), geom, X, Y, args.z)
    rows = [(float(x), float(y), float(v.real), float(v.imag))
            for x, y, v in zip(X.ravel(), Y.ravel(), np.ravel(vals))]
    fields = {"mode": f"{n},{m}", "wavelength_m": args.wavelength, "waist_m": args.waist, "z_m": args.z,
              "grid": "angular_spectrum" if args.spectrum else "field"}
    return csv_text(header("mode-grid", fields), (*label, "re", "im"), rows)


# ---------------------------------------------------------------------------

def _add_config(p, with_pump=True, with_method=True, max_order=6):
    p.add_argument("--lambda-p", type=parse_length, default=REFERENCE_CONFIG.pump_wavelength, help="pump wavelength (e.g. 351nm)")
    p.add_argument("--w0p", type=parse_length, default=REFERENCE_CONFIG.pump_waist, help="pump waist (e.g. 0.1mm)")
    p.add_argument("--length", type=parse_length, default=REFERENCE_CONFIG.length, help="crystal length (e.g. 1mm)")
    if with_pump:
        p.add_argument("--pump", type=int, nargs=2, metavar=("N", "M"), default=None)
        p.add_argument("--pump-superpose", type=parse_superposition, default=None, metavar="'n,m,re,im;...'")
    if max_order is not None:
        p.add_argument("--max-order", type=int, default=max_order)
    if with_method:
        p.add_argument("--method", choices=("exact", "thin", "oracle"), default="exact")
    p.add_argument("--format", choices=("csv", "text"), default="csv")
    p.add_argument("--out", default=None, help="output path (default stdout)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hgspdc", description="HG-mode decomposition of SPDC two-photon states")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("coeffs", help="two-photon amplitudes up to a truncation order")
    _add_config(p)
    p.add_argument("--include-zeros", action="store_true", help="also list zero and forbidden keys")
    p.set_defaults(func=cmd_coeffs)

    p = sub.add_parser("table1", help="HG02/HG20 second-order amplitudes, exact and thin-crystal")
    _add_config(p, with_pump=False, with_method=False, max_order=None)
    p.set_defaults(func=cmd_table1)

    p = sub.add_parser("figure2", help="cumulative probability vs order for several pump waists")
    _add_config(p, with_pump=False, with_method=False, max_order=12)
    p.add_argument("--widths", type=lambda s: [parse_length(x) for x in s.split(",")],
                   default=[1e-3, 0.1e-3, 0.05e-3], help="comma-separated waists (e.g. 1mm,0.1mm,0.05mm)")
    p.add_argument("--methods", type=parse_methods, default=["exact", "thin"], help="comma-separated, exact and/or thin")
    p.set_defaults(func=cmd_figure2)

    for name, func, helptext in (("density", cmd_density, "signal reduced density matrix F"),
                                 ("entangle-check", cmd_entangle_check, "purity and parity witness")):
        p = sub.add_parser(name, help=helptext)
        _add_config(p)
        p.add_argument("--postselect-first-order", action="store_true")
        p.set_defaults(func=func)

    p = sub.add_parser("bell", help="first-order Bell-state recipe")
    p.add_argument("target", choices=sorted(se.BELL_STATES))
    p.add_argument("source", nargs="?", default="hg00", help="hg00 or hg11")
    _add_config(p, with_pump=False, with_method=False, max_order=None)
    p.set_defaults(func=cmd_bell)

    p = sub.add_parser("nonmax", help="non-maximally entangled first-order state from an HG02/HG20 pump")
    p.add_argument("--theta", type=parse_angle, required=True, help="e.g. 30deg")
    p.add_argument("--phi", type=parse_angle, default=0.0, help="e.g. 90deg")
    _add_config(p, with_pump=False, with_method=False, max_order=None)
    p.set_defaults(func=cmd_nonmax)

    p = sub.add_parser("oracle-compare", help="closed form against quadrature")
    _add_config(p, with_method=False, max_order=2)
    p.add_argument("--route", choices=("2d", "4d"), default="4d")
    p.add_argument("--scheme", choices=SCHEMES, default="tensor_gauss_hermite")
    p.add_argument("--points", type=int, default=16)
    p.add_argument("--target-rel-error", type=float, default=1e-8)
    p.add_argument("--tolerance", type=float, default=1e-4)
    p.add_argument("--include-forbidden", action="store_true")
    p.set_defaults(func=cmd_oracle_compare)

    p = sub.add_parser("mode-grid", help="debug dump of an HG field or angular spectrum on a grid")
    p.add_argument("--mode", type=int, nargs=2, metavar=("N", "M"), default=(0, 0))
    p.add_argument("--wavelength", type=parse_length, default=REFERENCE_CONFIG.pump_wavelength)
    p.add_argument("--waist", type=parse_length, default=REFERENCE_CONFIG.pump_waist)
    p.add_argument("--z", type=float, default=0.0, help="axial position in metres")
    p.add_argument("--extent", type=float, default=3.0, help="half-width in waists (or 1/waists for --spectrum)")
    p.add_argument("--points", type=int, default=21)
    p.add_argument("--spectrum", action="store_true")
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_mode_grid)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        text = args.func(args)
    except SelfCheckFailed as exc:
        text, message = exc.args
        emit(text, args.out)
        print(f"hgspdc: self-check failed: {message}", file=sys.stderr)
        return EXIT_SELFCHECK
    except (OverflowError, ConvergenceError, FloatingPointError) as exc:
        print(f"hgspdc: numeric failure: {exc}", file=sys.stderr)
        return EXIT_RANGE
    except ValueError as exc:
        print(f"hgspdc: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    emit(text, args.out)
    return 0


if __name__ == "__main__":
    sys.exit(main())
