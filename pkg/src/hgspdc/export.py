"""Deterministic CSV / JSON rendering of results.

Every file starts with ``#`` comment lines carrying the resolved
configuration and the calibration constant; floats use ``%.6e``.
"""
from __future__ import annotations

import json
import sys

from .spdc_coeffs import CALIBRATION, TwoPhotonAmplitudes, iter_keys

AMPLITUDE_COLUMNS = ("j", "k", "u", "t", "amplitude_re", "amplitude_im", "probability")


def fmt(x: float) -> str:
    if x == 0:
        x = 0.0  # drop the sign of negative zero
    return f"{x:.6e}"


def header(command: str, fields: dict) -> list[str]:
    lines = [f"# hgspdc {command}"]
    for name, value in fields.items():
        if isinstance(value, float):
            value = fmt(value)
        lines.append(f"# {name}={value}")
    lines.append(f"# calibration_constant={fmt(CALIBRATION)}")
    return lines


def state_fields(state: TwoPhotonAmplitudes) -> dict:
    c = state.config
    return {
        "lambda_p_m": c.pump_wavelength,
        "w0p_m": c.pump_waist,
        "length_m": c.length,
        "A": c.focusing_parameter,
        "pump": state.pump.describe(),
        "method": state.method,
        "max_order": state.max_order,
    }


def csv_text(lines_before: list[str], columns, rows) -> str:
    out = list(lines_before)
    out.append(",".join(columns))
    for row in rows:
        out.append(",".join(fmt(v) if isinstance(v, float) else str(v) for v in row))
    return "\n".join(out) + "\n"


def amplitude_rows(state: TwoPhotonAmplitudes, include_zeros: bool = False):
    """(j, k, u, t, re, im, |a|^2) in key order.

    Zero amplitudes are dropped unless ``include_zeros``, in which case every
    key up to the truncation is listed, forbidden ones as 0.
    """
    keys = iter_keys(state.max_order) if include_zeros else state.keys()
    for key in keys:
        a = state[key]
        if a == 0 and not include_zeros:
            continue
        yield (*key, float(a.real), float(a.imag), float(abs(a) ** 2))


def amplitudes_csv(state: TwoPhotonAmplitudes, include_zeros: bool = False, command: str = "coeffs") -> str:
    return csv_text(header(command, state_fields(state)), AMPLITUDE_COLUMNS, amplitude_rows(state, include_zeros))


def amplitudes_record(state: TwoPhotonAmplitudes, include_zeros: bool = False) -> dict:
    return {
        "config": state_fields(state),
        "calibration_constant": CALIBRATION,
        "coefficients": [dict(zip(AMPLITUDE_COLUMNS, row)) for row in amplitude_rows(state, include_zeros)],
    }


def json_text(record: dict) -> str:
    return json.dumps(record, indent=2, sort_keys=True, default=str) + "\n"


def emit(text: str, path=None) -> None:
    if path is None or str(path) == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
