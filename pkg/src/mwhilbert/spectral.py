"""Frequency grids, sampled responses and signals, FFT helpers, phase and group delay.

All public frequencies are in Hz. Conversion to angular frequency happens
inside the operations that need it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import ResolutionError, SingularSampleError, ValidationError

TWO_PI = 2.0 * np.pi

# Default ceiling for a single unwrap step; anything closer to pi is treated as ambiguous.
DEFAULT_MAX_UNWRAP_STEP = 0.9 * np.pi


def _frozen_array(values: ArrayLike, dtype=None) -> NDArray:
    arr = np.array(values, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class FrequencyGrid:
    """Uniform frequency grid ``start_hz + k * step_hz`` for ``k < count``."""

    start_hz: float
    step_hz: float
    count: int

    def __post_init__(self):
        if not self.step_hz > 0:
            raise ValidationError(f"grid step must be positive, got {self.step_hz}")
        if int(self.count) != self.count or self.count < 2:
            raise ValidationError(f"grid needs at least 2 samples, got {self.count}")
        if self.start_hz < 0 or not np.isfinite(self.start_hz):
            raise ValidationError(f"grid start must be a finite nonnegative frequency, got {self.start_hz}")
        object.__setattr__(self, "count", int(self.count))

    @classmethod
    def from_band(cls, lo_hz: float, hi_hz: float, count: int) -> "FrequencyGrid":
        if not hi_hz > lo_hz:
            raise ValidationError(f"empty band [{lo_hz}, {hi_hz}]")
        return cls(lo_hz, (hi_hz - lo_hz) / (count - 1), count)

    @classmethod
    def snapped(
        cls,
        center_hz: float,
        lo_frac: float = 0.7,
        hi_frac: float = 1.3,
        min_count: int = 2001,
    ) -> "FrequencyGrid":
        """Grid over ``[lo_frac, hi_frac] * center_hz`` with the center, 0.8x and 1.2x on samples.

        The step is ``center_hz / m`` with ``m`` a multiple of 5, so every tenth of
        the center frequency is a grid point.
        """
        if not (0 <= lo_frac < 0.8 and hi_frac > 1.2):
            raise ValidationError("snapped grid must strictly contain [0.8, 1.2] x center")
        lo_units = round(lo_frac * 10)
        hi_units = round(hi_frac * 10)
        if not np.isclose(lo_units, lo_frac * 10) or not np.isclose(hi_units, hi_frac * 10):
            raise ValidationError("snapped grid edges must be multiples of 0.1 x center")
        span_units = hi_units - lo_units
        per_unit = max(1, int(np.ceil((min_count - 1) / span_units)))
        step = center_hz / (10 * per_unit)
        return cls(lo_units * per_unit * step, step, span_units * per_unit + 1)

    @property
    def stop_hz(self) -> float:
        return self.start_hz + (self.count - 1) * self.step_hz

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return self.start_hz + np.arange(self.count) * self.step_hz

    @property
    def angular(self) -> NDArray[np.float64]:
        return TWO_PI * self.frequencies

    def index_of(self, freq_hz: float, rtol: float = 1e-9) -> int:
        """Index of the sample equal to ``freq_hz``; raises if it is not on the grid."""
        k = (freq_hz - self.start_hz) / self.step_hz
        i = int(round(k))
        if not (0 <= i < self.count) or abs(k - i) > rtol * max(1.0, abs(k)):
            raise ValidationError(f"{freq_hz} Hz is not a sample of {self}")
        return i

    def contains(self, freq_hz: float) -> bool:
        return self.start_hz <= freq_hz <= self.stop_hz

    def refined(self) -> "FrequencyGrid":
        """Same span at twice the resolution; every old sample is kept."""
        return FrequencyGrid(self.start_hz, self.step_hz / 2, 2 * self.count - 1)


@dataclass(frozen=True)
class ComplexResponse:
    """Sampled complex transfer function (S21, H) on a :class:`FrequencyGrid`.

    ``singular`` lists sample indices that are allowed to be non-finite.
    """

    grid: FrequencyGrid
    values: NDArray[np.complex128]
    singular: tuple[int, ...] = ()

    def __post_init__(self):
        values = _frozen_array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.count,):
            raise ValidationError(f"expected {self.grid.count} values, got shape {values.shape}")
        bad = ~np.isfinite(values)
        bad[list(self.singular)] = False
        if bad.any():
            f = self.grid.frequencies[np.argmax(bad)]
            raise ValidationError(f"non-finite response value at {f} Hz")
        object.__setattr__(self, "values", values)

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return self.grid.frequencies

    @property
    def magnitude(self) -> NDArray[np.float64]:
        return np.abs(self.values)

    def __mul__(self, other: "ComplexResponse") -> "ComplexResponse":
        if other.grid != self.grid:
            raise ValidationError("responses live on different grids")
        return ComplexResponse(self.grid, self.values * other.values)


@dataclass(frozen=True)
class TimeSignal:
    """Uniformly sampled real or complex waveform."""

    start_s: float
    sample_rate_hz: float
    samples: NDArray

    def __post_init__(self):
        samples = np.asarray(self.samples)
        if not np.iscomplexobj(samples):
            samples = samples.astype(np.float64)
        samples = _frozen_array(samples)
        if not self.sample_rate_hz > 0:
            raise ValidationError(f"sample rate must be positive, got {self.sample_rate_hz}")
        if samples.ndim != 1 or samples.size < 2:
            raise ValidationError("a signal needs at least 2 samples")
        if not np.all(np.isfinite(samples)):
            raise ValidationError("signal contains non-finite samples")
        object.__setattr__(self, "samples", samples)

    @property
    def dt(self) -> float:
        return 1.0 / self.sample_rate_hz

    @property
    def times(self) -> NDArray[np.float64]:
        return self.start_s + np.arange(self.samples.size) / self.sample_rate_hz

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.samples)

    def energy(self) -> float:
        return float(np.sum(np.abs(self.samples) ** 2) * self.dt)

    def with_samples(self, samples: ArrayLike) -> "TimeSignal":
        return TimeSignal(self.start_s, self.sample_rate_hz, samples)


@dataclass(frozen=True)
class ComplexSpectrum:
    """Two-sided DFT of a :class:`TimeSignal`, in numpy ``fft`` bin order.

    ``values`` are unnormalised DFT coefficients; ``start_s`` and ``is_real``
    are carried so the inverse reproduces the original signal.
    """

    frequencies_hz: NDArray[np.float64]
    values: NDArray[np.complex128]
    sample_rate_hz: float
    start_s: float = 0.0
    is_real: bool = False

    def energy(self) -> float:
        """Signal energy by Parseval, in the same units as :meth:`TimeSignal.energy`."""
        n = self.values.size
        return float(np.sum(np.abs(self.values) ** 2) / n / self.sample_rate_hz)


@dataclass(frozen=True)
class PhaseCurve:
    """Unwrapped phase in radians on a grid."""

    grid: FrequencyGrid
    phase_rad: NDArray[np.float64]
    max_step: float = field(default=np.pi, repr=False)

    def __post_init__(self):
        phase = _frozen_array(self.phase_rad, dtype=np.float64)
        if phase.shape != (self.grid.count,):
            raise ValidationError(f"expected {self.grid.count} phase samples, got shape {phase.shape}")
        if not np.all(np.isfinite(phase)):
            raise ValidationError("phase contains non-finite samples")
        if np.any(np.abs(np.diff(phase)) >= self.max_step):
            raise ResolutionError("adjacent phase samples differ by pi or more")
        object.__setattr__(self, "phase_rad", phase)

    @property
    def frequencies(self) -> NDArray[np.float64]:
        return self.grid.frequencies

    @property
    def degrees(self) -> NDArray[np.float64]:
        return np.degrees(self.phase_rad)


def fft_forward(signal: TimeSignal) -> ComplexSpectrum:
    values = np.fft.fft(signal.samples)
    freqs = np.fft.fftfreq(signal.samples.size, d=signal.dt)
    return ComplexSpectrum(freqs, values, signal.sample_rate_hz, signal.start_s, signal.is_real)


def fft_inverse(spectrum: ComplexSpectrum) -> TimeSignal:
    samples = np.fft.ifft(spectrum.values)
    if spectrum.is_real:
        samples = samples.real
    return TimeSignal(spectrum.start_s, spectrum.sample_rate_hz, samples)


def unwrap_phase(response: ComplexResponse, max_step: float = DEFAULT_MAX_UNWRAP_STEP) -> PhaseCurve:
    """Continuous phase of ``response``.

    Raises
    ------
    SingularSampleError
        If any sample has zero magnitude.
    ResolutionError
        If an adjacent phase step, reduced modulo 2*pi, exceeds ``max_step``.
    """
    values = response.values
    zero = np.abs(values) == 0
    if zero.any():
        f = float(response.frequencies[np.argmax(zero)])
        raise SingularSampleError(f"zero-magnitude sample at {f} Hz, phase undefined", f)
    raw = np.angle(values)
    steps = np.diff(raw)
    steps = steps - TWO_PI * np.round(steps / TWO_PI)
    worst = np.max(np.abs(steps)) if steps.size else 0.0
    if worst > max_step:
        k = int(np.argmax(np.abs(steps)))
        raise ResolutionError(
            f"phase step of {worst:.3f} rad near {response.frequencies[k]:.6g} Hz; grid too coarse to unwrap"
        )
    phase = raw[0] + np.concatenate(([0.0], np.cumsum(steps)))
    return PhaseCurve(response.grid, phase)


def max_phase_step(response: ComplexResponse) -> float:
    steps = np.diff(np.angle(response.values))
    steps = steps - TWO_PI * np.round(steps / TWO_PI)
    return float(np.max(np.abs(steps)))


def phase_derivative(phase: PhaseCurve) -> NDArray[np.float64]:
    """d(phase)/d(omega): central differences inside, one-sided at the ends."""
    if phase.grid.count < 3:
        raise ValidationError("differentiation needs at least 3 grid samples")
    return np.gradient(phase.phase_rad, TWO_PI * phase.grid.step_hz, edge_order=1)


def group_delay(phase: PhaseCurve) -> NDArray[np.float64]:
    """Group delay ``-dphi/domega`` in seconds, one value per grid sample."""
    return -phase_derivative(phase)
