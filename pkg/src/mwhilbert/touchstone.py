"""Touchstone v1 two-port (.s2p) reader and writer.

Only S-parameters are supported. Each data line holds a frequency followed by
S11, S21, S12, S22 as pairs in the file's format:

* ``RI``: real, imaginary
* ``MA``: magnitude, angle in degrees
* ``DB``: 20*log10 magnitude, angle in degrees
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray

from .errors import RangeError, TouchstoneParseError, ValidationError
from .spectral import ComplexResponse, FrequencyGrid

FREQ_UNITS = {"HZ": 1.0, "KHZ": 1e3, "MHZ": 1e6, "GHZ": 1e9}
UNIT_NAMES = {"HZ": "Hz", "KHZ": "kHz", "MHZ": "MHz", "GHZ": "GHz"}
FORMATS = ("RI", "MA", "DB")
S21_RIPPLE_LIMIT = 1.1
# lossless data written with full precision may exceed 1 by rounding alone
PASSIVITY_SLACK = 1e-9


@dataclass(frozen=True)
class TouchstoneRecord:
    freq_unit: str
    format: str
    reference_ohms: float
    frequencies_hz: NDArray[np.float64]
    s: NDArray[np.complex128]  # shape (n, 4): S11, S21, S12, S22
    parameter: str = "S"

    @property
    def s11(self) -> NDArray[np.complex128]:
        return self.s[:, 0]

    @property
    def s21(self) -> NDArray[np.complex128]:
        return self.s[:, 1]

    @property
    def s12(self) -> NDArray[np.complex128]:
        return self.s[:, 2]

    @property
    def s22(self) -> NDArray[np.complex128]:
        return self.s[:, 3]


def _parse_option_line(line: str, lineno: int) -> tuple[str, str, float]:
    # Touchstone defaults for fields left out of the option line
    unit, fmt, ohms = "GHZ", "MA", 50.0
    tokens = line[1:].split()
    i = 0
    while i < len(tokens):
        tok = tokens[i].upper()
        if tok in FREQ_UNITS:
            unit = tok
        elif tok in FORMATS:
            fmt = tok
        elif tok == "S":
            pass
        elif tok in ("Y", "Z", "H", "G"):
            raise TouchstoneParseError(f"only S-parameters are supported, got {tokens[i]}", lineno)
        elif tok == "R":
            if i + 1 >= len(tokens):
                raise TouchstoneParseError("option line ends after 'R'", lineno)
            try:
                ohms = float(tokens[i + 1])
            except ValueError:
                raise TouchstoneParseError(f"bad reference impedance {tokens[i + 1]!r}", lineno) from None
            i += 1
        else:
            raise TouchstoneParseError(f"unknown option {tokens[i]!r}", lineno)
        i += 1
    return unit, fmt, ohms


def _decode(pairs: NDArray[np.float64], fmt: str) -> NDArray[np.complex128]:
    a, b = pairs[..., 0], pairs[..., 1]
    if fmt == "RI":
        return a + 1j * b
    mag = a if fmt == "MA" else 10.0 ** (a / 20.0)
    return mag * np.exp(1j * np.deg2rad(b))


def _encode(values: NDArray[np.complex128], fmt: str) -> NDArray[np.float64]:
    if fmt == "RI":
        return np.stack([values.real, values.imag], axis=-1)
    mag = np.abs(values)
    ang = np.rad2deg(np.angle(values))
    if fmt == "DB":
        # exact zeros have no dB value; -400 dB decodes back to 1e-20
        mag = 20.0 * np.log10(np.maximum(mag, 1e-20))
    return np.stack([mag, ang], axis=-1)


def parse_touchstone(text: str) -> TouchstoneRecord:
    option = None
    freqs: list[float] = []
    rows: list[list[float]] = []
    last_freq = -np.inf
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("!", 1)[0].strip()
        if not line:
            continue
        if line.startswith("#"):
            if option is not None:
                raise TouchstoneParseError("second option line", lineno)
            option = _parse_option_line(line, lineno)
            continue
        if line.startswith("["):
            raise TouchstoneParseError("Touchstone v2 keywords are not supported", lineno)
        if option is None:
            raise TouchstoneParseError("data before the option line", lineno)
        tokens = line.split()
        if len(tokens) != 9:
            raise TouchstoneParseError(f"expected 9 columns for a two-port row, got {len(tokens)}", lineno)
        try:
            values = [float(tok) for tok in tokens]
        except ValueError as exc:
            raise TouchstoneParseError(f"non-numeric value ({exc})", lineno) from None
        if not np.all(np.isfinite(values)):
            raise TouchstoneParseError("non-finite value", lineno)
        f = values[0] * FREQ_UNITS[option[0]]
        if not f > last_freq:
            raise TouchstoneParseError("frequencies must be strictly increasing", lineno)
        last_freq = f
        freqs.append(f)
        rows.append(values[1:])
    if option is None:
        raise TouchstoneParseError("missing option line ('# <unit> S <format> R <ohms>')")
    if not rows:
        raise TouchstoneParseError("no data rows")
    unit, fmt, ohms = option
    s = _decode(np.asarray(rows).reshape(-1, 4, 2), fmt)
    peak = float(np.max(np.abs(s[:, 1])))
    if peak > S21_RIPPLE_LIMIT:
        raise TouchstoneParseError(f"|S21| reaches {peak:.4f}, beyond the tolerated {S21_RIPPLE_LIMIT}")
    if peak > 1.0 + PASSIVITY_SLACK:
        warnings.warn(f"|S21| exceeds 1 (max {peak:.4f}); treating as measurement ripple", stacklevel=2)
    return TouchstoneRecord(UNIT_NAMES[unit], fmt, ohms, np.asarray(freqs), s)


def read_touchstone(path: str | Path) -> TouchstoneRecord:
    return parse_touchstone(Path(path).read_text())


def serialize_touchstone(record: TouchstoneRecord, fmt: str | None = None, unit: str | None = None) -> str:
    fmt = (fmt or record.format).upper()
    unit = (unit or record.freq_unit).upper()
    if fmt not in FORMATS or unit not in FREQ_UNITS:
        raise ValidationError(f"unsupported format/unit {fmt}/{unit}")
    lines = [f"# {UNIT_NAMES[unit]} S {fmt} R {record.reference_ohms:g}"]
    data = _encode(record.s, fmt).reshape(len(record.frequencies_hz), 8)
    scale = FREQ_UNITS[unit]
    for f, row in zip(record.frequencies_hz, data):
        lines.append(" ".join(repr(float(v)) for v in (f / scale, *row)))
    return "\n".join(lines) + "\n"


def to_response(
    record: TouchstoneRecord,
    band_hz: tuple[float, float] | None = None,
    count: int | None = None,
    grid: FrequencyGrid | None = None,
) -> ComplexResponse:
    """S21 on a uniform grid, interpolating real and imaginary parts linearly.

    Give either an explicit ``grid`` or a band (default: the record's span) and
    a sample count (default: the number of records).
    """
    f = record.frequencies_hz
    if grid is None:
        lo, hi = band_hz if band_hz is not None else (f[0], f[-1])
        grid = FrequencyGrid.from_band(lo, hi, count or len(f))
    target = grid.frequencies
    slack = 1e-9 * (f[-1] - f[0])
    if target[0] < f[0] - slack or target[-1] > f[-1] + slack:
        raise RangeError(
            f"requested band [{target[0]:.6g}, {target[-1]:.6g}] Hz exceeds the record span [{f[0]:.6g}, {f[-1]:.6g}] Hz"
        )
    target = np.clip(target, f[0], f[-1])
    s21 = record.s21
    values = np.interp(target, f, s21.real) + 1j * np.interp(target, f, s21.imag)
    return ComplexResponse(grid, values)
