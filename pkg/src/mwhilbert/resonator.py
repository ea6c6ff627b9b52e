"""Coupler + loop-resonator unit: steady-state transfer function, cascades, delay figures.

The unit is a through line coupled to a transmission-line loop. With through
coefficient ``T``, coupling coefficient ``C`` and loop transmission ``D`` the
signal flow graph gives::

    S21 = T + C**2 * D / (1 - T * D)

with ``|T|**2 + |C|**2 = 1``, ``angle(C) = angle(T) - pi/2`` and
``D = exp(-j * omega * loop_delay)``. The coupled section is a real line, so
``angle(T) = -omega * coupled_section_delay``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DomainError, SingularityError, ValidationError
from .spectral import (
    TWO_PI,
    ComplexResponse,
    FrequencyGrid,
    PhaseCurve,
    group_delay,
    max_phase_step,
    unwrap_phase,
)

DEFAULT_CENTER_HZ = 10e9

# Model grids are refined until no adjacent phase step exceeds this.
MODEL_MAX_PHASE_STEP = np.pi / 4
MAX_REFINEMENTS = 12


@dataclass(frozen=True)
class CouplerResonatorParams:
    """Parameters of one unit.

    ``loop_delay_s`` defaults to ``3 / (2 f0)`` (a 3*lambda/2 uncoupled loop) and
    ``coupled_section_delay_s`` to ``1 / (2 f0)`` (a lambda/2 coupled section),
    which puts the loop resonance exactly on ``center_freq_hz``.
    """

    coupling_mag: float
    center_freq_hz: float = DEFAULT_CENTER_HZ
    loop_delay_s: float | None = None
    coupled_section_delay_s: float | None = None

    def __post_init__(self):
        c = float(self.coupling_mag)
        if not (0.0 <= c <= 1.0):
            raise ValidationError(f"coupling magnitude must lie in [0, 1], got {self.coupling_mag}")
        if not (self.center_freq_hz > 0 and math.isfinite(self.center_freq_hz)):
            raise ValidationError(f"center frequency must be positive, got {self.center_freq_hz}")
        object.__setattr__(self, "coupling_mag", c)
        if self.loop_delay_s is None:
            object.__setattr__(self, "loop_delay_s", 1.5 / self.center_freq_hz)
        if self.coupled_section_delay_s is None:
            object.__setattr__(self, "coupled_section_delay_s", 0.5 / self.center_freq_hz)
        if not self.loop_delay_s > 0:
            raise ValidationError(f"loop delay must be positive, got {self.loop_delay_s}")
        if not self.coupled_section_delay_s >= 0:
            raise ValidationError(f"coupled-section delay must be nonnegative, got {self.coupled_section_delay_s}")

    @property
    def through_mag(self) -> float:
        return math.sqrt(1.0 - self.coupling_mag**2)

    @property
    def round_trip_delay_s(self) -> float:
        """Delay of one turn around the loop, coupled section included."""
        return self.loop_delay_s + self.coupled_section_delay_s

    @property
    def free_spectral_range_hz(self) -> float:
        return 1.0 / self.round_trip_delay_s

    def with_coupling(self, coupling_mag: float) -> "CouplerResonatorParams":
        return CouplerResonatorParams(
            coupling_mag, self.center_freq_hz, self.loop_delay_s, self.coupled_section_delay_s
        )

    def theta(self, freq_hz: ArrayLike) -> NDArray:
        """Phase of T in radians."""
        return -TWO_PI * np.asarray(freq_hz, dtype=float) * self.coupled_section_delay_s

    def through(self, freq_hz: ArrayLike) -> NDArray:
        return self.through_mag * np.exp(1j * self.theta(freq_hz))

    def coupling(self, freq_hz: ArrayLike) -> NDArray:
        return self.coupling_mag * np.exp(1j * (self.theta(freq_hz) - np.pi / 2))

    def coupling_squared(self, freq_hz: ArrayLike) -> NDArray:
        """C**2 from the complex identity ``T**2 - exp(2j theta)``."""
        return self.through(freq_hz) ** 2 - np.exp(2j * self.theta(freq_hz))

    def loop(self, freq_hz: ArrayLike) -> NDArray:
        return np.exp(-1j * TWO_PI * np.asarray(freq_hz, dtype=float) * self.loop_delay_s)


@dataclass(frozen=True)
class CascadeSpec:
    units: tuple[CouplerResonatorParams, ...]

    def __post_init__(self):
        units = tuple(self.units)
        if not units:
            raise ValidationError("a cascade needs at least one unit")
        object.__setattr__(self, "units", units)

    @classmethod
    def identical(cls, params: CouplerResonatorParams, n: int) -> "CascadeSpec":
        return cls((params,) * n)


def s21(params: CouplerResonatorParams, freq_hz: ArrayLike) -> NDArray[np.complex128]:
    """Unit S21 at arbitrary frequencies (array in, array out)."""
    f = np.asarray(freq_hz, dtype=float)
    T = params.through(f)
    D = params.loop(f)
    denom = 1.0 - T * D
    if params.coupling_mag == 0.0:
        if np.any(denom == 0):
            bad = np.atleast_1d(f)[np.argmax(np.atleast_1d(denom == 0))]
            raise SingularityError(f"uncoupled lossless loop resonates exactly at {bad} Hz")
        return np.asarray(T, dtype=np.complex128)
    return T + params.coupling_squared(f) * D / denom


def unit_transfer(params: CouplerResonatorParams, grid: FrequencyGrid) -> ComplexResponse:
    return ComplexResponse(grid, s21(params, grid.frequencies))


def cascade_transfer(spec: CascadeSpec, grid: FrequencyGrid) -> ComplexResponse:
    values = np.ones(grid.count, dtype=np.complex128)
    for unit in spec.units:
        values = values * s21(unit, grid.frequencies)
    return ComplexResponse(grid, values)


def cascade_s21(spec: CascadeSpec, freq_hz: ArrayLike) -> NDArray[np.complex128]:
    values = np.ones(np.shape(freq_hz), dtype=np.complex128)
    for unit in spec.units:
        values = values * s21(unit, freq_hz)
    return values


def _as_cascade(model: CouplerResonatorParams | CascadeSpec) -> CascadeSpec:
    return model if isinstance(model, CascadeSpec) else CascadeSpec((model,))


def evaluate_phase(
    model: CouplerResonatorParams | CascadeSpec,
    grid: FrequencyGrid,
    max_step: float = MODEL_MAX_PHASE_STEP,
) -> tuple[ComplexResponse, PhaseCurve]:
    """Response and unwrapped phase, doubling the grid resolution until every
    adjacent phase step is at most ``max_step``."""
    spec = _as_cascade(model)
    for _ in range(MAX_REFINEMENTS + 1):
        response = cascade_transfer(spec, grid)
        if max_phase_step(response) <= max_step:
            return response, unwrap_phase(response)
        grid = grid.refined()
    raise SingularityError(f"phase still unresolved after {MAX_REFINEMENTS} grid doublings")


def model_grid(center_hz: float, lo_frac: float = 0.7, hi_frac: float = 1.3, count: int = 2001) -> FrequencyGrid:
    return FrequencyGrid.snapped(center_hz, lo_frac, hi_frac, count)


def delay_at(
    model: CouplerResonatorParams | CascadeSpec, freq_hz: float, step_hz: float
) -> float:
    """Central-difference group delay at one frequency with the given step."""
    f = np.array([freq_hz - step_hz, freq_hz + step_hz])
    h = cascade_s21(_as_cascade(model), f)
    dphi = np.angle(h[1] / h[0])
    return float(-dphi / (TWO_PI * 2 * step_hz))


def _linewidth_hz(params: CouplerResonatorParams) -> float:
    """Rough resonance half-width, used only to size the first refinement step."""
    r = params.through_mag
    return max((1.0 - r) / (np.pi * params.round_trip_delay_s), 1e-12 * params.center_freq_hz)


def peak_delay(params: CouplerResonatorParams, rtol: float = 1e-7) -> tuple[float, float]:
    """Group delay at ``f0`` and the frequency step that resolved it.

    The central-difference delay at the resonance sample is recomputed with the
    step halved until it changes by less than ``rtol``.
    """
    f0 = params.center_freq_hz
    step = 0.3 * f0 / 1000
    if 0.0 < params.coupling_mag < 1.0:
        step = min(step, _linewidth_hz(params) / 4)
    prev = delay_at(params, f0, step)
    for _ in range(40):
        step /= 2
        cur = delay_at(params, f0, step)
        if abs(cur - prev) <= rtol * abs(cur):
            return cur, step
        prev = cur
    return cur, step


def half_delay_bandwidth(params: CouplerResonatorParams, rtol: float = 1e-6) -> float:
    """Width of the band around ``f0`` where the delay is at least half its peak.

    Each edge is found by bisection between ``f0`` and the nearest anti-resonance
    ``f0 +- FSR/2``, where the delay of the all-pass loop is smallest. Returns
    ``inf`` at the flat-delay limits ``|C| = 0`` and ``|C| = 1``.
    """
    c = params.coupling_mag
    if c == 0.0 or c == 1.0:
        return math.inf
    peak, step = peak_delay(params)
    target = peak / 2
    f0 = params.center_freq_hz
    half_fsr = params.free_spectral_range_hz / 2

    def edge(sign: int) -> float:
        lo, hi = 0.0, half_fsr  # offsets from f0; delay(lo) >= target > delay(hi)
        if delay_at(params, f0 + sign * hi, step) >= target:
            raise DomainError("delay never falls to half its peak within half a free spectral range")
        while hi - lo > rtol * max(hi, step):
            mid = 0.5 * (lo + hi)
            if delay_at(params, f0 + sign * mid, step) >= target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return edge(+1) + edge(-1)


def peak_delay_and_bandwidth(params: CouplerResonatorParams) -> tuple[float, float]:
    """(tau(f0) in seconds, half-delay bandwidth in Hz)."""
    return peak_delay(params)[0], half_delay_bandwidth(params)


def resonance_delay_closed_form(params: CouplerResonatorParams) -> float:
    """Closed-form delay at resonance, used as an independent check in tests.

    For the default geometry ``S21 = exp(j theta) (r - z) / (1 - r z)`` with
    ``z = exp(-j omega tau_L)``; at ``z = 1`` the delay is
    ``tau_s + tau_L (1 + r) / (1 - r)``.
    """
    r = params.through_mag
    if r == 1.0:
        return params.coupled_section_delay_s
    return params.coupled_section_delay_s + params.round_trip_delay_s * (1 + r) / (1 - r)


def unit_group_delay(
    params: CouplerResonatorParams, grid: FrequencyGrid
) -> tuple[FrequencyGrid, NDArray[np.float64]]:
    """Group delay over a (possibly refined) grid."""
    response, phase = evaluate_phase(params, grid)
    return response.grid, group_delay(phase)
