"""Discrete-time transient simulation of the coupler + loop unit.

The flow graph is run as a sample-by-sample recurrence with integer-sample
delay lines. Writing ``S21 = T + C**2 D / (1 - T D)`` and using
``C**2 = -|C|**2 exp(2j theta)`` (a real gain and a delay), the output is::

    v[n] = x[n] + r * v[n - N_loop]                     (loop fed through T)
    y[n] = r * x[n - N_s] - |C|**2 * v[n - N_s - N_loop]

with ``r = |T|``, ``N_s`` the coupled-section delay and ``N_loop`` one full turn
(coupled section plus uncoupled loop), both in samples.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from .errors import ConfigurationError, NotFoundError
from .resonator import CouplerResonatorParams, delay_at, peak_delay, s21
from .spectral import TWO_PI, TimeSignal

SAMPLES_PER_CARRIER_PERIOD = 64
DELAY_QUANTIZATION_RTOL = 1e-3


def default_dt(params: CouplerResonatorParams) -> float:
    return 1.0 / (SAMPLES_PER_CARRIER_PERIOD * params.center_freq_hz)


def _delay_samples(delay_s: float, dt_s: float, name: str) -> int:
    n = delay_s / dt_s
    k = int(round(n))
    if abs(n - k) > DELAY_QUANTIZATION_RTOL * max(n, 1.0):
        raise ConfigurationError(f"{name} of {delay_s:.6g} s is not a whole number of {dt_s:.6g} s steps")
    return k


class FlowGraphSimulator:
    """One transient run. Holds the delay-line state, so do not share instances."""

    def __init__(self, params: CouplerResonatorParams, dt_s: float | None = None):
        self.params = params
        self.dt_s = default_dt(params) if dt_s is None else float(dt_s)
        if not self.dt_s > 0:
            raise ConfigurationError(f"time step must be positive, got {dt_s}")
        self.n_section = _delay_samples(params.coupled_section_delay_s, self.dt_s, "coupled-section delay")
        n_loop_only = _delay_samples(params.loop_delay_s, self.dt_s, "loop delay")
        if n_loop_only < 1:
            raise ConfigurationError("loop delay is shorter than one time step")
        self.n_loop = self.n_section + n_loop_only
        self._loop_state: NDArray | None = None

    def run(self, x: NDArray[np.float64]) -> NDArray[np.float64]:
        """Output for input ``x`` (taken as zero before the first sample)."""
        r = self.params.through_mag
        c2 = self.params.coupling_mag**2
        n = x.size
        nl = self.n_loop
        v = np.zeros(n)
        # loop recurrence one turn at a time: each block depends only on the previous one
        for start in range(0, n, nl):
            stop = min(start + nl, n)
            v[start:stop] = x[start:stop]
            if start >= nl:
                v[start:stop] += r * v[start - nl : stop - nl]
        self._loop_state = v
        y = np.zeros(n)
        ns = self.n_section
        if ns < n:
            y[ns:] += r * x[: n - ns]
        lag = ns + nl
        if lag < n:
            y[lag:] -= c2 * v[: n - lag]
        return y


def drive_signal(freq_hz: float, n: int, dt_s: float) -> NDArray[np.float64]:
    """Sinusoid switched on at t = 0."""
    return np.cos(TWO_PI * freq_hz * dt_s * np.arange(n))


def transient_simulate(
    params: CouplerResonatorParams,
    drive_freq_hz: float,
    duration_s: float,
    dt_s: float | None = None,
    check_duration: bool = True,
) -> TimeSignal:
    """Output-port waveform for a cosine at ``drive_freq_hz`` switched on at t = 0."""
    sim = FlowGraphSimulator(params, dt_s)
    if not drive_freq_hz > 0:
        raise ConfigurationError(f"drive frequency must be positive, got {drive_freq_hz}")
    if check_duration:
        tau = steady_group_delay(params, drive_freq_hz)
        if duration_s < 5 * tau:
            raise ConfigurationError(
                f"duration {duration_s:.4g} s is shorter than 5x the group delay ({tau:.4g} s)"
            )
    n = int(math.ceil(duration_s / sim.dt_s)) + 1
    y = sim.run(drive_signal(drive_freq_hz, n, sim.dt_s))
    return TimeSignal(0.0, 1.0 / sim.dt_s, y)


def steady_group_delay(params: CouplerResonatorParams, freq_hz: float) -> float:
    if freq_hz == params.center_freq_hz:
        return peak_delay(params)[0]
    step = min(1e-6 * freq_hz, 0.25 * params.free_spectral_range_hz * 1e-3)
    return delay_at(params, freq_hz, step)


@dataclass(frozen=True)
class SteadyState:
    phasor: complex  # y(t) -> Re(phasor * exp(j w t))
    analytic: complex

    @property
    def amplitude(self) -> float:
        return abs(self.phasor)

    @property
    def phase_deg(self) -> float:
        return math.degrees(np.angle(self.phasor))

    @property
    def amplitude_error(self) -> float:
        return abs(self.amplitude - abs(self.analytic)) / abs(self.analytic)

    @property
    def phase_error_deg(self) -> float:
        return abs(math.degrees(np.angle(self.phasor / self.analytic)))


def fit_phasor(signal: TimeSignal, freq_hz: float, periods: int = 8) -> complex:
    """Least-squares complex amplitude over the last ``periods`` carrier periods."""
    n = int(round(periods * signal.sample_rate_hz / freq_hz))
    n = min(n, signal.samples.size)
    t = signal.times[-n:]
    y = signal.samples[-n:]
    basis = np.column_stack([np.cos(TWO_PI * freq_hz * t), -np.sin(TWO_PI * freq_hz * t)])
    (a, b), *_ = np.linalg.lstsq(basis, y, rcond=None)
    return complex(a, b)


def steady_state(signal: TimeSignal, params: CouplerResonatorParams, freq_hz: float) -> SteadyState:
    return SteadyState(fit_phasor(signal, freq_hz), complex(s21(params, freq_hz)))


def complex_envelope(signal: TimeSignal, freq_hz: float) -> tuple[NDArray, NDArray]:
    """Sliding one-period I/Q demodulation; returns (window-centre times, envelope)."""
    w = max(2, int(round(signal.sample_rate_hz / freq_hz)))
    t = signal.times
    mixed = signal.samples * np.exp(-1j * TWO_PI * freq_hz * t)
    csum = np.concatenate(([0.0], np.cumsum(mixed)))
    env = 2.0 * (csum[w:] - csum[:-w]) / w
    centres = t[: env.size] + 0.5 * (w - 1) / signal.sample_rate_hz
    return centres, env


def settle_time(
    signal: TimeSignal, freq_hz: float, steady_phasor: complex, fraction: float = 0.9
) -> float:
    """First time after which the complex envelope stays within ``1 - fraction`` of steady state."""
    times, env = complex_envelope(signal, freq_hz)
    err = np.abs(env - steady_phasor) / abs(steady_phasor)
    outside = np.nonzero(err > 1.0 - fraction)[0]
    if outside.size == 0:
        return float(times[0])
    last = outside[-1]
    if last + 1 >= times.size:
        raise NotFoundError("output never settles within the simulated duration")
    return float(times[last + 1])
