"""Figures of merit of a phase response: rotated phase and transition bandwidth.

Both are defined from the phase at 80% and 120% of the center frequency:

* rotated phase: ``phi(0.8 w0) - phi(1.2 w0) + 0.4 w0 phi'(0.8 w0)``, i.e. the
  phase fall across the band once the asymptotic linear trend is removed;
* transition bandwidth: the band ``[wL, wR]`` where the phase slope has departed
  from the asymptotic slopes at 0.8 w0 / 1.2 w0 by a relative factor ``alpha``.

Derivatives come from :func:`mwhilbert.spectral.phase_derivative`, so measured
responses go through the same code path as the analytic model.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import CoverageError, DomainError, NotFoundError, RangeError
from .resonator import (
    CouplerResonatorParams,
    evaluate_phase,
    half_delay_bandwidth,
    model_grid,
    peak_delay,
)
from .spectral import TWO_PI, ComplexResponse, PhaseCurve, group_delay, phase_derivative, unwrap_phase

DEFAULT_ALPHA = 0.35
MIN_SAMPLES_IN_BAND = 100


@dataclass(frozen=True)
class TransitionBand:
    width_hz: float
    omega_L_hz: float
    omega_R_hz: float
    center_hz: float

    @property
    def asymmetry_hz(self) -> float:
        return (self.center_hz - self.omega_L_hz) - (self.omega_R_hz - self.center_hz)


@dataclass(frozen=True)
class CharacterizationReport:
    coupling_mag: float | None
    center_hz: float
    rotated_phase_rad: float
    transition_bandwidth_hz: float
    alpha: float
    omega_L_hz: float
    omega_R_hz: float
    peak_delay_s: float
    half_delay_bandwidth_hz: float

    @property
    def rotated_phase_deg(self) -> float:
        return math.degrees(self.rotated_phase_rad)

    @property
    def relative_transition_bandwidth(self) -> float:
        return self.transition_bandwidth_hz / self.center_hz

    def to_dict(self) -> dict:
        return asdict(self)


def _band_indices(phase: PhaseCurve, center_hz: float) -> tuple[int, int, int]:
    grid = phase.grid
    if not (grid.contains(0.8 * center_hz) and grid.contains(1.2 * center_hz)):
        raise CoverageError(
            f"phase grid [{grid.start_hz:.6g}, {grid.stop_hz:.6g}] Hz does not cover 0.8-1.2 x {center_hz:.6g} Hz"
        )
    try:
        i8 = grid.index_of(0.8 * center_hz)
        i12 = grid.index_of(1.2 * center_hz)
        i0 = grid.index_of(center_hz)
    except ValueError as exc:
        raise CoverageError(f"0.8, 1.0 and 1.2 x center must be grid samples: {exc}") from None
    if i12 - i8 < MIN_SAMPLES_IN_BAND:
        raise CoverageError(f"only {i12 - i8} samples between 0.8 and 1.2 x center, need {MIN_SAMPLES_IN_BAND}")
    if i8 == 0:
        raise CoverageError("0.8 x center must not be the first grid sample")
    return i8, i0, i12


def rotated_phase(phase: PhaseCurve, center_hz: float) -> float:
    """Rotated phase in radians (positive when the phase falls through resonance)."""
    i8, _, i12 = _band_indices(phase, center_hz)
    slope = phase_derivative(phase)[i8]
    phi = phase.phase_rad
    return float(phi[i8] - phi[i12] + 0.4 * TWO_PI * center_hz * slope)


def _first_crossing(freqs, departure, indices, alpha) -> float | None:
    prev = None
    for k in indices:
        if departure[k] >= alpha:
            if prev is None:
                return float(freqs[k])
            # linear interpolation between the last sample below alpha and this one
            w = (alpha - departure[prev]) / (departure[k] - departure[prev])
            return float(freqs[prev] + w * (freqs[k] - freqs[prev]))
        prev = k
    return None


def transition_bandwidth(phase: PhaseCurve, center_hz: float, alpha: float = DEFAULT_ALPHA) -> TransitionBand:
    """Band edges where the slope first departs by ``alpha`` from the asymptotic slopes.

    Each side is scanned from the outside in (0.8 w0 upward, 1.2 w0 downward) and
    the first crossing is taken.
    """
    if not alpha > 0:
        raise DomainError(f"alpha must be positive, got {alpha}")
    i8, i0, i12 = _band_indices(phase, center_hz)
    slope = phase_derivative(phase)
    s_lo, s_hi = slope[i8], slope[i12]
    if s_lo == 0 or s_hi == 0:
        raise DomainError("asymptotic phase slope is zero at 0.8 or 1.2 x center")
    freqs = phase.frequencies
    lo = _first_crossing(freqs, (slope - s_lo) / s_lo, range(i8, i0 + 1), alpha)
    hi = _first_crossing(freqs, (slope - s_hi) / s_hi, range(i12, i0 - 1, -1), alpha)
    if lo is None or hi is None:
        raise NotFoundError(f"slope departure never reaches alpha={alpha} between 0.8 and 1.2 x center")
    return TransitionBand(hi - lo, lo, hi, center_hz)


def _check_inside(coupling: float) -> None:
    if not 0.0 < coupling < 1.0:
        raise DomainError(f"figures of merit are undefined at the limit coupling |C|={coupling}")


def characterize_unit(
    params: CouplerResonatorParams,
    alpha: float = DEFAULT_ALPHA,
    grid_count: int = 2001,
    check_symmetry: bool = True,
) -> CharacterizationReport:
    _check_inside(params.coupling_mag)
    f0 = params.center_freq_hz
    _, phase = evaluate_phase(params, model_grid(f0, count=grid_count))
    band = transition_bandwidth(phase, f0, alpha)
    if check_symmetry and abs(band.asymmetry_hz) > phase.grid.step_hz:
        raise NotFoundError(
            f"transition band is asymmetric by {band.asymmetry_hz:.6g} Hz (> one grid step) at |C|={params.coupling_mag}"
        )
    tau0, _ = peak_delay(params)
    return CharacterizationReport(
        coupling_mag=params.coupling_mag,
        center_hz=f0,
        rotated_phase_rad=rotated_phase(phase, f0),
        transition_bandwidth_hz=band.width_hz,
        alpha=alpha,
        omega_L_hz=band.omega_L_hz,
        omega_R_hz=band.omega_R_hz,
        peak_delay_s=tau0,
        half_delay_bandwidth_hz=half_delay_bandwidth(params),
    )


def coupling_sweep(
    coupling_values: Iterable[float],
    base_params: CouplerResonatorParams,
    alpha: float = DEFAULT_ALPHA,
    grid_count: int = 2001,
) -> list[CharacterizationReport]:
    values = [float(c) for c in coupling_values]
    for c in values:
        _check_inside(c)
    return [characterize_unit(base_params.with_coupling(c), alpha, grid_count) for c in values]


def characterize_response(
    response: ComplexResponse, center_hz: float, alpha: float = DEFAULT_ALPHA
) -> CharacterizationReport:
    """Figures of merit of a sampled (e.g. measured) response.

    The response grid must already put 0.8, 1.0 and 1.2 x ``center_hz`` on samples.
    The half-delay bandwidth is read off the sampled delay curve around the center.
    """
    phase = unwrap_phase(response)
    band = transition_bandwidth(phase, center_hz, alpha)
    tau = group_delay(phase)
    i0 = phase.grid.index_of(center_hz)
    peak = tau[i0]
    above = tau >= peak / 2
    lo = i0
    while lo > 0 and above[lo - 1]:
        lo -= 1
    hi = i0
    while hi < tau.size - 1 and above[hi + 1]:
        hi += 1
    freqs = phase.frequencies
    return CharacterizationReport(
        coupling_mag=None,
        center_hz=center_hz,
        rotated_phase_rad=rotated_phase(phase, center_hz),
        transition_bandwidth_hz=band.width_hz,
        alpha=alpha,
        omega_L_hz=band.omega_L_hz,
        omega_R_hz=band.omega_R_hz,
        peak_delay_s=float(peak),
        half_delay_bandwidth_hz=float(freqs[hi] - freqs[lo]),
    )


def unit_rotated_phase(params: CouplerResonatorParams, grid_count: int = 2001) -> float:
    _, phase = evaluate_phase(params, model_grid(params.center_freq_hz, count=grid_count))
    return rotated_phase(phase, params.center_freq_hz)


def find_coupling_for_rotated_phase(
    target_rad: float,
    base_params: CouplerResonatorParams,
    bounds: Sequence[float] = (0.05, 0.95),
    tol: float = 1e-4,
) -> float:
    """Coupling magnitude whose rotated phase equals ``target_rad``.

    Bisection on the rotated phase, which decreases monotonically with coupling.
    """
    lo, hi = float(bounds[0]), float(bounds[1])
    phi_lo = unit_rotated_phase(base_params.with_coupling(lo))
    phi_hi = unit_rotated_phase(base_params.with_coupling(hi))
    if not (phi_hi <= target_rad <= phi_lo):
        raise RangeError(
            f"target {math.degrees(target_rad):.2f} deg outside achievable range "
            f"[{math.degrees(phi_hi):.2f}, {math.degrees(phi_lo):.2f}] deg for |C| in [{lo}, {hi}]"
        )
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if unit_rotated_phase(base_params.with_coupling(mid)) > target_rad:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
