"""Edge detection, peak clipping and single-sideband modulation pipelines.

A "device" is either a sampled :class:`ComplexResponse` (model or measurement),
interpolated onto the FFT bins of the signal, or a callable ``H(f)`` evaluated
exactly on the positive-frequency bins. Negative frequencies always use
``conj(H(|f|))``, i.e. the device is real.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Literal, Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import optimize

from .errors import ConfigurationError, CoverageError, ValidationError
from .hilbert import RECT, TRI, envelope, hilbert_spectral
from .spectral import TWO_PI, ComplexResponse, FrequencyGrid, TimeSignal, unwrap_phase

TransferFunction = Callable[[NDArray[np.float64]], NDArray[np.complex128]]
Device = Union[ComplexResponse, TransferFunction]

MAX_OUT_OF_BAND_FRACTION = 0.05
# Ratios beyond this are reported as clipped (the exact value is infinite or at round-off level).
CLIP_DB = 120.0


# --- stimuli -----------------------------------------------------------------


@dataclass(frozen=True)
class ModulatedPulseTrain:
    """Periodic rect/tri pulse train, optionally on a cosine carrier.

    ``pulse_width_s`` is the full width of the pulse base. Pulse ``k`` is
    centred at ``(k + 1/2) * period_s``. ``carrier_hz = 0`` gives a baseband train.
    """

    pulse_kind: Literal["rect", "tri"]
    carrier_hz: float
    pulse_width_s: float
    period_s: float
    num_periods: int
    sample_rate_hz: float

    def validate(self) -> None:
        problems = []
        if self.pulse_kind not in ("rect", "tri"):
            problems.append(f"unknown pulse kind {self.pulse_kind!r}")
        if self.num_periods < 1:
            problems.append("the train needs at least one period")
        if not 0 < self.pulse_width_s < self.period_s:
            problems.append("pulse width must be positive and shorter than the period")
        if self.carrier_hz < 0:
            problems.append("carrier frequency must be nonnegative")
        if self.sample_rate_hz < 8 * self.carrier_hz or self.sample_rate_hz <= 0:
            problems.append("sample rate must be at least 8x the carrier")
        if self.sample_rate_hz > 0 and self.period_s * self.sample_rate_hz < 4:
            problems.append("period spans fewer than 4 samples")
        if problems:
            raise ConfigurationError("; ".join(problems))

    @property
    def centers_s(self) -> NDArray[np.float64]:
        return (np.arange(self.num_periods) + 0.5) * self.period_s

    @property
    def edges_s(self) -> NDArray[np.float64]:
        half = self.pulse_width_s / 2
        return np.sort(np.concatenate([self.centers_s - half, self.centers_s + half]))


def baseband_train(spec: ModulatedPulseTrain, t: NDArray[np.float64]) -> NDArray[np.float64]:
    pulse = RECT if spec.pulse_kind == "rect" else TRI
    # position within the period relative to the pulse centre, in pulse half-widths
    local = np.mod(t, spec.period_s) - spec.period_s / 2
    return pulse(local / (spec.pulse_width_s / 2))


def generate_pulse_train(spec: ModulatedPulseTrain) -> TimeSignal:
    spec.validate()
    n = int(round(spec.num_periods * spec.period_s * spec.sample_rate_hz))
    t = np.arange(n) / spec.sample_rate_hz
    x = baseband_train(spec, t)
    if spec.carrier_hz > 0:
        x = x * np.cos(TWO_PI * spec.carrier_hz * t)
    return TimeSignal(0.0, spec.sample_rate_hz, x)


def two_tone(center_hz: float, offset_hz: float, sample_rate_hz: float, n: int) -> TimeSignal:
    """Equal-amplitude tones at ``center -+ offset`` (a suppressed-carrier DSB signal)."""
    t = np.arange(n) / sample_rate_hz
    x = np.cos(TWO_PI * (center_hz - offset_hz) * t) + np.cos(TWO_PI * (center_hz + offset_hz) * t)
    return TimeSignal(0.0, sample_rate_hz, x)


# --- ideal transfer functions ---------------------------------------------------


def ideal_hilbert(freqs_hz: NDArray[np.float64]) -> NDArray[np.complex128]:
    """``-1j * sign(f)`` on nonnegative frequencies (0 at DC)."""
    return -1j * np.sign(freqs_hz).astype(np.complex128)


def centered_hilbert(center_hz: float) -> TransferFunction:
    """Ideal Hilbert transformer centred on ``center_hz``: ``-1j * sign(f - center)``."""

    def h(freqs_hz):
        return -1j * np.sign(np.asarray(freqs_hz) - center_hz).astype(np.complex128)

    return h


def pure_delay(delay_s: float) -> TransferFunction:
    def h(freqs_hz):
        return np.exp(-1j * TWO_PI * np.asarray(freqs_hz) * delay_s)

    return h


def identity(freqs_hz: NDArray[np.float64]) -> NDArray[np.complex128]:
    return np.ones(np.shape(freqs_hz), dtype=np.complex128)


# --- device application --------------------------------------------------------------


@dataclass(frozen=True)
class DeviceOutput:
    signal: TimeSignal
    out_of_band_fraction: float


def _device_on_bins(device: Device, freqs: NDArray[np.float64]) -> tuple[NDArray[np.complex128], NDArray[np.bool_]]:
    """Device response at nonnegative ``freqs`` and a mask of bins it covers."""
    if isinstance(device, ComplexResponse):
        grid_f = device.frequencies
        inside = (freqs >= grid_f[0]) & (freqs <= grid_f[-1])
        h = np.zeros(freqs.shape, dtype=np.complex128)
        h[inside] = np.interp(freqs[inside], grid_f, device.values.real) + 1j * np.interp(
            freqs[inside], grid_f, device.values.imag
        )
        return h, inside
    return np.asarray(device(freqs), dtype=np.complex128), np.ones(freqs.shape, dtype=bool)


def apply_device(
    device: Device, signal: TimeSignal, max_out_of_band: float = MAX_OUT_OF_BAND_FRACTION
) -> DeviceOutput:
    """Filter ``signal`` (as one period of a periodic waveform) through ``device``.

    Bins outside a sampled response's grid are zeroed; their share of the signal
    energy is reported and must not exceed ``max_out_of_band``.
    """
    x = signal.samples
    n = x.size
    if signal.is_real:
        spec = np.fft.rfft(x)
        freqs = np.fft.rfftfreq(n, d=signal.dt)
        weight = np.full(freqs.size, 2.0)
        weight[0] = 1.0
        if n % 2 == 0:
            weight[-1] = 1.0
        h, inside = _device_on_bins(device, freqs)
        power = weight * np.abs(spec) ** 2
        y = np.fft.irfft(spec * h, n)
    else:
        spec = np.fft.fft(x)
        freqs = np.fft.fftfreq(n, d=signal.dt)
        h_pos, inside = _device_on_bins(device, np.abs(freqs))
        h = np.where(freqs >= 0, h_pos, np.conj(h_pos))
        power = np.abs(spec) ** 2
        y = np.fft.ifft(spec * h)
    total = power.sum()
    fraction = float(power[~inside].sum() / total) if total > 0 else 0.0
    if fraction > max_out_of_band:
        raise CoverageError(
            f"{100 * fraction:.2f}% of the signal energy lies outside the response band "
            f"(limit {100 * max_out_of_band:.1f}%)"
        )
    return DeviceOutput(signal.with_samples(y), fraction)


def estimate_bulk_delay(
    response: ComplexResponse,
    center_hz: float,
    edge_bands: tuple[tuple[float, float], tuple[float, float]] = ((0.75, 0.8), (1.2, 1.25)),
) -> float:
    """Asymptotic (nondispersive) delay of a device, in seconds.

    Least-squares fit of a common slope, with a separate offset per band, to the
    unwrapped phase over two bands on either side of ``center_hz``.
    """
    phase = unwrap_phase(response).phase_rad
    # offset and scale the abscissa so the slope and intercept columns are comparable
    scale = TWO_PI * center_hz
    w = TWO_PI * (response.frequencies - center_hz) / scale
    rows, rhs = [], []
    for k, (lo, hi) in enumerate(edge_bands):
        sel = (response.frequencies >= lo * center_hz) & (response.frequencies <= hi * center_hz)
        if sel.sum() < 2:
            raise CoverageError(f"response has fewer than 2 samples in [{lo}, {hi}] x center")
        a = np.zeros((sel.sum(), 3))
        a[:, 0] = w[sel]
        a[:, 1 + k] = 1.0
        rows.append(a)
        rhs.append(phase[sel])
    coef, *_ = np.linalg.lstsq(np.vstack(rows), np.concatenate(rhs), rcond=None)
    return float(-coef[0] / scale)


# --- edge / peak metrics ---------------------------------------------------------------


def _magnitude_envelope(signal: TimeSignal, modulated: bool) -> NDArray[np.float64]:
    if modulated:
        return envelope(signal)
    return np.abs(signal.samples)


def _sample_index(signal: TimeSignal, t: NDArray[np.float64]) -> NDArray[np.int64]:
    n = signal.samples.size
    return np.mod(np.round((t - signal.start_s) * signal.sample_rate_hz).astype(np.int64), n)


def _leading_crossing(env: NDArray[np.float64], peak: int) -> float:
    """Fractional index where ``env`` last rises through half-way from its pre-peak minimum to the peak."""
    base = float(np.min(env[: peak + 1]))
    level = base + 0.5 * (env[peak] - base)
    below = np.nonzero(env[:peak] < level)[0]
    if below.size == 0:
        return float(peak)
    i = int(below[-1])
    return i + (level - env[i]) / (env[i + 1] - env[i])


def _clip_ratio_db(num: float, den: float) -> tuple[float, bool]:
    if den <= 0 or num / den > 10 ** (CLIP_DB / 20):
        return CLIP_DB, True
    return 20 * math.log10(num / den), False


@dataclass(frozen=True)
class EdgeReport:
    detected: bool
    edge_to_center_ratio_db: float
    edge_alignment_error_s: float
    clipped: bool = False
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "edge_to_center_ratio_db": self.edge_to_center_ratio_db,
            "edge_alignment_error_s": self.edge_alignment_error_s,
            "clipped": self.clipped,
            "message": self.message,
        }


def edge_detection_metric(
    input: TimeSignal, output: TimeSignal, spec: ModulatedPulseTrain, bulk_delay_s: float = 0.0
) -> EdgeReport:
    """Compare the output envelope at the pulse edges with its value at pulse centres.

    Nominal edge and centre times are shifted by ``bulk_delay_s``. Each edge peak
    is searched within a quarter of the shorter of pulse width and gap, and the
    detected edge time is the half-amplitude point on the peak's leading side.
    A resonant device rings down after a falling edge, so the peak itself can
    trail the edge by many carrier periods while the rise stays aligned.
    """
    modulated = spec.carrier_hz > 0
    env = _magnitude_envelope(output, modulated)
    if not np.any(env > 0):
        return EdgeReport(False, float("nan"), float("nan"), message="output is identically zero")
    n = env.size
    half_window = 0.25 * min(spec.pulse_width_s, spec.period_s - spec.pulse_width_s)
    w = max(1, int(round(half_window * output.sample_rate_hz)))
    peaks, offsets = [], []
    for edge in spec.edges_s + bulk_delay_s:
        centre = int(_sample_index(output, np.array([edge]))[0])
        local = env[np.mod(np.arange(centre - w, centre + w + 1), n)]
        k = int(np.argmax(local))
        peaks.append(local[k])
        offsets.append((_leading_crossing(local, k) - w) / output.sample_rate_hz)
    centres = env[_sample_index(output, spec.centers_s + bulk_delay_s)]
    edge_level = float(np.mean(peaks))
    centre_level = float(np.mean(centres))
    if edge_level <= 0:
        return EdgeReport(False, float("nan"), float("nan"), message="no envelope peak near the nominal edges")
    ratio, clipped = _clip_ratio_db(edge_level, centre_level)
    return EdgeReport(True, ratio, float(np.mean(np.abs(offsets))), clipped)


@dataclass(frozen=True)
class PeakReport:
    center_suppression_db: float
    clipped: bool
    recovery_error: float

    def to_dict(self) -> dict:
        return {
            "center_suppression_db": self.center_suppression_db,
            "clipped": self.clipped,
            "recovery_error": self.recovery_error,
        }


def recovery_error(signal: TimeSignal) -> float:
    """Relative error of ``H(H(x)) = -x`` on a sampled signal."""
    twice = hilbert_spectral(hilbert_spectral(signal)).samples
    x = signal.samples
    return float(np.linalg.norm(twice + x) / np.linalg.norm(x))


def peak_clipping_metric(
    input: TimeSignal, output: TimeSignal, spec: ModulatedPulseTrain, bulk_delay_s: float = 0.0
) -> PeakReport:
    """Input envelope at pulse centres over output envelope at the delayed centres."""
    modulated = spec.carrier_hz > 0
    env_in = _magnitude_envelope(input, modulated)
    env_out = _magnitude_envelope(output, modulated)
    c_in = float(np.mean(env_in[_sample_index(input, spec.centers_s)]))
    c_out = float(np.mean(env_out[_sample_index(output, spec.centers_s + bulk_delay_s)]))
    ratio, clipped = _clip_ratio_db(c_in, c_out)
    return PeakReport(ratio, clipped, recovery_error(input))


# --- single sideband -------------------------------------------------------------------------


@dataclass(frozen=True)
class SsbSpec:
    """Delay of the direct branch and which sideband to keep.

    The Hilbert branch is added for the upper sideband and subtracted for the lower.
    """

    delay_branch_s: float
    sideband: Literal["upper", "lower"] = "upper"

    def __post_init__(self):
        if self.sideband not in ("upper", "lower"):
            raise ValidationError(f"sideband must be 'upper' or 'lower', got {self.sideband!r}")

    @property
    def sign(self) -> int:
        return 1 if self.sideband == "upper" else -1


@dataclass(frozen=True)
class SsbResult:
    signal: TimeSignal
    suppression_db: float
    clipped: bool
    residual: float  # suppressed-to-kept amplitude ratio
    warning: str = ""


def sideband_powers(signal: TimeSignal, center_hz: float) -> tuple[float, float]:
    """(power above, power below) ``center_hz``; the centre bin itself is excluded."""
    spec = np.fft.rfft(signal.samples)
    freqs = np.fft.rfftfreq(signal.samples.size, d=signal.dt)
    power = np.abs(spec) ** 2
    return float(power[freqs > center_hz].sum()), float(power[(freqs < center_hz) & (freqs > 0)].sum())


def _resolve_branch(branch: Device | str, center_hz: float) -> Device:
    if isinstance(branch, str):
        if branch != "ideal":
            raise ValidationError(f"unknown Hilbert branch {branch!r}")
        return centered_hilbert(center_hz)
    return branch


def ssb_modulate(
    signal: TimeSignal,
    hilbert_branch: Device | str,
    spec: SsbSpec,
    center_hz: float,
    min_suppression_db: float = 0.0,
) -> SsbResult:
    """Delayed copy plus/minus the Hilbert-branch output.

    ``hilbert_branch="ideal"`` uses the ideal transformer centred on ``center_hz``.
    A warning string is set when the suppression falls below ``min_suppression_db``.
    """
    branch = _resolve_branch(hilbert_branch, center_hz)
    delayed = apply_device(pure_delay(spec.delay_branch_s), signal).signal.samples
    hilb = apply_device(branch, signal).signal.samples
    out = signal.with_samples(delayed + spec.sign * hilb)
    upper, lower = sideband_powers(out, center_hz)
    kept, dropped = (upper, lower) if spec.sideband == "upper" else (lower, upper)
    ratio, clipped = _clip_ratio_db(math.sqrt(kept), math.sqrt(dropped))
    residual = math.sqrt(dropped / kept) if kept > 0 else math.inf
    warning = ""
    if ratio < min_suppression_db:
        warning = f"branch misalignment: suppression {ratio:.2f} dB, residual {residual:.3g}"
    return SsbResult(out, ratio, clipped, residual, warning)


def calibrate_ssb_delay(
    signal: TimeSignal,
    hilbert_branch: Device | str,
    sideband: Literal["upper", "lower"],
    center_hz: float,
    base_delay_s: float = 0.0,
    scan_points: int = 768,
    span_periods: float = 1.5,
) -> float:
    """Direct-branch delay in ``[base, base + span_periods/center)`` that maximizes suppression.

    The default span exceeds one carrier period so the null of a dropped
    component somewhat below the carrier is always inside the scan.
    """
    branch = _resolve_branch(hilbert_branch, center_hz)
    sign = SsbSpec(0.0, sideband).sign
    spec = np.fft.rfft(signal.samples)
    freqs = np.fft.rfftfreq(signal.samples.size, d=signal.dt)
    h, inside = _device_on_bins(branch, freqs)
    upper = freqs > center_hz
    lower = (freqs < center_hz) & (freqs > 0)
    keep, drop = (upper, lower) if sideband == "upper" else (lower, upper)
    hx = sign * h * spec

    def leak(tau: float) -> float:
        y = spec * np.exp(-1j * TWO_PI * freqs * tau) + hx
        p = np.abs(y) ** 2
        return float(p[drop].sum() / max(p[keep].sum(), 1e-300))

    period = 1.0 / center_hz
    step = span_periods * period / scan_points
    taus = base_delay_s + step * np.arange(scan_points)
    scores = [leak(t) for t in taus]
    k = int(np.argmin(scores))
    res = optimize.minimize_scalar(
        leak, bounds=(taus[k] - step, taus[k] + step), method="bounded", options={"xatol": 1e-9 * period}
    )
    return float(res.x) if res.fun <= scores[k] else float(taus[k])


def composite_response(
    hilbert_branch: Device | str, spec: SsbSpec, center_hz: float, freqs_hz: ArrayLike
) -> NDArray[np.complex128]:
    """Transfer function of the whole modulator: delay branch +- Hilbert branch."""
    f = np.asarray(freqs_hz, dtype=float)
    branch = _resolve_branch(hilbert_branch, center_hz)
    h, _ = _device_on_bins(branch, f)
    return pure_delay(spec.delay_branch_s)(f) + spec.sign * h
