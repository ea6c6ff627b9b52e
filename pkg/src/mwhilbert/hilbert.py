"""Ideal Hilbert transform.

Two independent realizations:

* :func:`hilbert_spectral` multiplies the DFT by ``-1j * sign(f)`` (zero at DC);
* :func:`hilbert_pv_quadrature` evaluates the Cauchy principal value
  ``(1/pi) PV int x(tau) / (t - tau) dtau`` by adaptive quadrature.

Closed forms for the unit rectangle and triangle serve as analytic oracles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate
from scipy.special import xlogy

from .errors import DomainError, QuadratureError, ValidationError
from .spectral import TimeSignal

PV_TOLERANCE = 1e-8


@dataclass(frozen=True)
class AnalyticPulse:
    """Unit-half-width rectangle or triangle centred on t = 0."""

    kind: Literal["rect", "tri"]

    def __post_init__(self):
        if self.kind not in ("rect", "tri"):
            raise ValidationError(f"unknown pulse kind {self.kind!r}")

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        t = np.asarray(t, dtype=float)
        if self.kind == "rect":
            return np.where(np.abs(t) <= 1.0, 1.0, 0.0)
        return np.where(np.abs(t) <= 1.0, 1.0 - np.abs(t), 0.0)

    @property
    def support(self) -> tuple[float, float]:
        return (-1.0, 1.0)

    @property
    def breakpoints(self) -> tuple[float, ...]:
        return (-1.0, 1.0) if self.kind == "rect" else (-1.0, 0.0, 1.0)

    def hilbert(self, t: ArrayLike) -> NDArray[np.float64]:
        if self.kind == "rect":
            return rect_hilbert_closed_form(t)
        return tri_hilbert_closed_form(t)


RECT = AnalyticPulse("rect")
TRI = AnalyticPulse("tri")


def rect_hilbert_closed_form(t: ArrayLike) -> NDArray[np.float64]:
    """``(1/pi) ln|(t+1)/(t-1)|``; returns +inf at t = 1 and -inf at t = -1."""
    t = np.asarray(t, dtype=float)
    with np.errstate(divide="ignore"):
        out = (np.log(np.abs(t + 1.0)) - np.log(np.abs(t - 1.0))) / np.pi
    return out


def tri_hilbert_closed_form(t: ArrayLike) -> NDArray[np.float64]:
    """Hilbert transform of the unit triangle.

    Evaluated as ``-(1/pi) [2t ln|t| - (t+1) ln|t+1| + (1-t) ln|t-1|]``, an
    algebraic rearrangement of ``-(1/pi)(ln|(t-1)/(t+1)| + t ln|t^2/(t^2-1)|)``
    whose ``x ln x`` terms carry the finite limits at t = 0 (value 0) and
    t = +-1 (value +-2 ln2 / pi).
    """
    t = np.asarray(t, dtype=float)
    a = np.abs(t)
    total = 2.0 * xlogy(t, a) - xlogy(t + 1.0, np.abs(t + 1.0)) + xlogy(1.0 - t, np.abs(t - 1.0))
    return -total / np.pi


def hilbert_multiplier(freqs_hz: ArrayLike) -> NDArray[np.complex128]:
    """``-1j * sign(f)``: -1j above zero, +1j below, 0 at DC."""
    return -1j * np.sign(np.asarray(freqs_hz, dtype=float))


def hilbert_spectral(signal: TimeSignal) -> TimeSignal:
    """Spectral Hilbert transform of a sampled signal (treated as one period).

    The DC bin is zeroed, and for real inputs of even length so is the Nyquist
    bin, which has no conjugate partner.
    """
    x = signal.samples
    n = x.size
    if signal.is_real:
        spec = np.fft.rfft(x)
        spec = spec * (-1j)
        spec[0] = 0.0
        if n % 2 == 0:
            spec[-1] = 0.0
        return signal.with_samples(np.fft.irfft(spec, n))
    spec = np.fft.fft(x)
    spec = spec * hilbert_multiplier(np.fft.fftfreq(n))
    if n % 2 == 0:
        spec[n // 2] = 0.0
    return signal.with_samples(np.fft.ifft(spec))


def analytic_signal(signal: TimeSignal) -> NDArray[np.complex128]:
    if not signal.is_real:
        raise ValidationError("the analytic signal is defined for real inputs")
    return signal.samples + 1j * hilbert_spectral(signal).samples


def envelope(signal: TimeSignal) -> NDArray[np.float64]:
    """Analytic-signal magnitude of a real signal."""
    return np.abs(analytic_signal(signal))


def _as_integrand(pulse: AnalyticPulse | TimeSignal):
    if isinstance(pulse, AnalyticPulse):
        return pulse, pulse.support, pulse.breakpoints
    times = pulse.times
    samples = np.real(pulse.samples)

    def f(tau):
        return np.interp(tau, times, samples, left=0.0, right=0.0)

    return f, (float(times[0]), float(times[-1])), tuple(times)


def _quad_segments(f, t: float, pieces: list[tuple[float, float]], breakpoints) -> tuple[float, float]:
    total, err = 0.0, 0.0
    for a, b in pieces:
        if b <= a:
            continue
        inner = [p for p in breakpoints if a < p < b]
        edges = [a, *inner, b]
        for lo, hi in zip(edges[:-1], edges[1:]):
            val, e = integrate.quad(lambda tau: f(tau) / (t - tau), lo, hi, epsabs=1e-14, epsrel=1e-13, limit=200)
            total += val
            err += e
    return total, err


def _excluded_integral(f, t: float, eps: float, support, breakpoints) -> tuple[float, float]:
    a, b = support
    pieces = [(a, min(b, t - eps)), (max(a, t + eps), b)]
    return _quad_segments(f, t, pieces, breakpoints)


def hilbert_pv_quadrature(
    pulse: AnalyticPulse | TimeSignal, t: float, epsilon: float = 1e-2, tol: float = PV_TOLERANCE
) -> float:
    """Principal-value Hilbert transform at a single time ``t``.

    The window ``(t - eps, t + eps)`` is cut out, the rest integrated adaptively,
    and the result Richardson-extrapolated to ``eps -> 0`` from ``eps``, ``eps/2``
    and ``eps/4``. For a pulse that is smooth on the window the truncation error
    has only odd powers of ``eps``, which the two extrapolation levels remove.
    """
    if not epsilon > 0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    f, support, breakpoints = _as_integrand(pulse)
    t = float(t)
    if isinstance(pulse, AnalyticPulse) and pulse.kind == "rect" and abs(t) == 1.0:
        raise DomainError("the rectangle's Hilbert transform has a pole at |t| = 1")
    # keep the window clear of kinks other than one sitting exactly on t
    gaps = [abs(t - p) for p in breakpoints if p != t]
    if gaps:
        epsilon = min(epsilon, 0.5 * min(gaps))
    if epsilon <= 0:
        raise DomainError("no room for an exclusion window around t")

    vals, errs = [], []
    for k in range(3):
        v, e = _excluded_integral(f, t, epsilon / 2**k, support, breakpoints)
        vals.append(v)
        errs.append(e)
    r1 = [2 * vals[1] - vals[0], 2 * vals[2] - vals[1]]
    r2 = (8 * r1[1] - r1[0]) / 7
    achieved = max(abs(r2 - r1[1]), 3 * max(errs)) / math.pi
    if achieved > tol:
        raise QuadratureError(f"principal value did not converge at t={t}: estimated error {achieved:.3g}", achieved)
    return float(r2 / math.pi)
