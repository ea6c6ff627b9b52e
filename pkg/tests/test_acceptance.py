"""Acceptance criteria, one check per criterion.

Each check prints a single PASS/FAIL line with the measured values, the
tolerance and the runtime limit. Run standalone for the summary only::

    python3 tests/test_acceptance.py

or under pytest (``pytest -s tests/test_acceptance.py`` shows the lines).
"""

from __future__ import annotations

import math
import sys
import time

import numpy as np
import pytest

from mwhilbert.applications import (
    ModulatedPulseTrain,
    SsbSpec,
    apply_device,
    calibrate_ssb_delay,
    edge_detection_metric,
    estimate_bulk_delay,
    generate_pulse_train,
    peak_clipping_metric,
    recovery_error,
    ssb_modulate,
    two_tone,
)
from mwhilbert.characterization import coupling_sweep, transition_bandwidth, unit_rotated_phase
from mwhilbert.hilbert import RECT, TRI, hilbert_pv_quadrature, hilbert_spectral
from mwhilbert.resonator import (
    CascadeSpec,
    CouplerResonatorParams,
    cascade_transfer,
    evaluate_phase,
    model_grid,
    peak_delay,
)
from mwhilbert.spectral import FrequencyGrid, TimeSignal, group_delay, unwrap_phase
from mwhilbert.touchstone import TouchstoneRecord, parse_touchstone, serialize_touchstone, to_response
from mwhilbert.transient import settle_time, steady_group_delay, steady_state, transient_simulate

F0 = 10e9
NS = 1e-9


def _line(tag: str, ok: bool, detail: str, elapsed: float, limit: float) -> bool:
    in_time = elapsed < limit
    status = "PASS" if ok and in_time else "FAIL"
    print(f"[{status}] {tag}: {detail} | runtime {elapsed:.2f} s (limit {limit:g} s)")
    return ok and in_time


def check_ac1() -> bool:
    start = time.perf_counter()
    p087 = math.degrees(unit_rotated_phase(CouplerResonatorParams(0.87)))
    p071 = math.degrees(unit_rotated_phase(CouplerResonatorParams(0.71)))
    elapsed = time.perf_counter() - start
    ok = abs(p087 - 180) <= 5 and abs(p071 - 270) <= 10
    detail = f"rotated phase |C|=0.87 -> {p087:.2f} deg (180 +- 5), |C|=0.71 -> {p071:.2f} deg (270 +- 10)"
    return _line("AC1 rotated-phase design points", ok, detail, elapsed, 1.0)


def check_ac2() -> bool:
    start = time.perf_counter()
    tau = {c: peak_delay(CouplerResonatorParams(c))[0] / NS for c in (0.0, 1.0, 0.1, 0.9)}
    # sampled delay at the resonance sample of the adaptively refined model grid
    sampled = {}
    for c in tau:
        response, phase = evaluate_phase(CouplerResonatorParams(c), model_grid(F0))
        sampled[c] = group_delay(phase)[response.grid.index_of(F0)] / NS
    elapsed = time.perf_counter() - start
    ok = (
        abs(tau[0.0] - 0.05) <= 1e-4
        and abs(tau[1.0] - 0.25) <= 1e-4
        and abs(tau[0.1] / 79.4 - 1) <= 0.05
        and abs(tau[0.9] / 0.58 - 1) <= 0.15
    )
    detail = (
        f"tau(f0) |C|=0: {tau[0.0]:.6f} ns (0.05 +- 1e-4), |C|=1: {tau[1.0]:.6f} ns (0.25 +- 1e-4), "
        f"|C|=0.1: {tau[0.1]:.3f} ns (79.4 +- 5%), |C|=0.9: {tau[0.9]:.4f} ns (0.58 +- 15%); "
        f"grid-sample values {sampled[0.0]:.4f}/{sampled[1.0]:.4f}/{sampled[0.1]:.3f}/{sampled[0.9]:.4f} ns"
    )
    return _line("AC2 group-delay anchors", ok, detail, elapsed, 5.0)


def check_ac3() -> bool:
    start = time.perf_counter()
    _, phase = evaluate_phase(CouplerResonatorParams(0.71), model_grid(F0))
    band = transition_bandwidth(phase, F0, 0.35)
    elapsed = time.perf_counter() - start
    rel = 100 * band.width_hz / F0
    ok = abs(rel - 20) <= 3
    detail = f"transition bandwidth |C|=0.71, alpha=0.35 -> {rel:.2f}% of f0 (20 +- 3 points)"
    return _line("AC3 transition bandwidth", ok, detail, elapsed, 1.0)


def check_ac4() -> bool:
    start = time.perf_counter()
    reports = coupling_sweep(np.linspace(0.1, 0.9, 20), CouplerResonatorParams(0.5), 0.35)
    elapsed = time.perf_counter() - start

    def strictly(values, sign):
        return bool(np.all(sign * np.diff(values) > 0))

    flags = {
        "rotated phase decreasing": strictly([r.rotated_phase_rad for r in reports], -1),
        "transition bandwidth increasing": strictly([r.transition_bandwidth_hz for r in reports], +1),
        "peak delay decreasing": strictly([r.peak_delay_s for r in reports], -1),
        "half-delay bandwidth increasing": strictly([r.half_delay_bandwidth_hz for r in reports], +1),
    }
    widths = [r.transition_bandwidth_hz for r in reports]
    k = int(np.argmax(widths))
    detail = ", ".join(f"{name}: {'yes' if v else 'NO'}" for name, v in flags.items())
    if not flags["transition bandwidth increasing"]:
        detail += f" (width peaks at |C|={reports[k].coupling_mag:.3f})"
    return _line("AC4 trade-off monotonicity", all(flags.values()), detail, elapsed, 10.0)


def _band_limited(seed: int, n: int = 4096, kmax: int = 400) -> TimeSignal:
    rng = np.random.default_rng(seed)
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1 : kmax + 1] = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    return TimeSignal(0.0, 1.0, np.fft.irfft(spec, n))


def check_ac5() -> bool:
    start = time.perf_counter()
    worst = 0.0
    for pulse in (RECT, TRI):
        for t in (0.0, 0.5, -0.5, 2.0, -2.0, 5.0, -5.0):
            worst = max(worst, abs(hilbert_pv_quadrature(pulse, t) - float(pulse.hilbert(t))))
    involution = 0.0
    for seed in range(20):
        x = _band_limited(seed)
        twice = hilbert_spectral(hilbert_spectral(x)).samples
        involution = max(involution, float(np.linalg.norm(twice + x.samples) / np.linalg.norm(x.samples)))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and involution <= 1e-9
    detail = f"max |PV - closed form| = {worst:.2e} (<= 1e-6), max involution error = {involution:.2e} (<= 1e-9)"
    return _line("AC5 Hilbert oracle equivalence", ok, detail, elapsed, 30.0)


def check_ac6() -> bool:
    start = time.perf_counter()
    amp_err, phase_err, settles = [], [], []
    for c in (0.3, 0.5, 0.7):
        p = CouplerResonatorParams(c)
        tau = steady_group_delay(p, F0)
        sig = transient_simulate(p, F0, 12 * tau)
        ss = steady_state(sig, p, F0)
        amp_err.append(ss.amplitude_error)
        phase_err.append(ss.phase_error_deg)
        settles.append(settle_time(sig, F0, ss.phasor) / NS)
    elapsed = time.perf_counter() - start
    ordered = settles[0] > settles[1] > settles[2]
    ok = max(amp_err) <= 0.01 and max(phase_err) <= 1.0 and ordered
    detail = (
        f"max amplitude error {max(amp_err):.1e} (<= 1%), max phase error {max(phase_err):.1e} deg (<= 1), "
        f"settle times {settles[0]:.3f}/{settles[1]:.3f}/{settles[2]:.3f} ns strictly decreasing: {'yes' if ordered else 'NO'}"
    )
    return _line("AC6 transient/steady-state consistency", ok, detail, elapsed, 30.0)


def check_ac7() -> bool:
    start = time.perf_counter()
    fs = 160e9
    tones = two_tone(F0, 0.5e9, fs, 1600)
    ssb = []
    for sideband in ("upper", "lower"):
        delay = calibrate_ssb_delay(tones, "ideal", sideband, F0)
        ssb.append(ssb_modulate(tones, "ideal", SsbSpec(delay, sideband), F0).suppression_db)

    grid = FrequencyGrid.from_band(0.0, 2 * F0, 40001)
    cascade = cascade_transfer(CascadeSpec.identical(CouplerResonatorParams(0.71), 2), grid)
    bulk = estimate_bulk_delay(cascade, F0)
    rect = ModulatedPulseTrain("rect", F0, 2 * NS, 4 * NS, 4, fs)
    x = generate_pulse_train(rect)
    edge = edge_detection_metric(x, apply_device(cascade, x).signal, rect, bulk)
    tri = ModulatedPulseTrain("tri", F0, 2 * NS, 4 * NS, 4, fs)
    x = generate_pulse_train(tri)
    peak = peak_clipping_metric(x, apply_device(cascade, x).signal, tri, bulk)
    recovery = recovery_error(x)
    elapsed = time.perf_counter() - start
    ok = (
        min(ssb) >= 60
        and edge.edge_to_center_ratio_db >= 6
        and peak.center_suppression_db >= 6
        and recovery <= 1e-6
    )
    detail = (
        f"ideal SSB suppression {min(ssb):.1f} dB (>= 60), edge-to-center {edge.edge_to_center_ratio_db:.2f} dB (>= 6) "
        f"aligned to {edge.edge_alignment_error_s * F0:.2f} carrier periods, tri peak suppression "
        f"{peak.center_suppression_db:.2f} dB (>= 6), double-transform error {recovery:.1e} (<= 1e-6)"
    )
    return _line("AC7 applications", ok, detail, elapsed, 60.0)


def check_ac8() -> bool:
    start = time.perf_counter()
    rng = np.random.default_rng(8)
    n = 50
    freqs = np.cumsum(rng.uniform(0.01, 0.5, n)) * 1e9
    s = rng.uniform(0.01, 1.0, (n, 4)) * np.exp(1j * rng.uniform(-np.pi, np.pi, (n, 4)))
    record = TouchstoneRecord("GHz", "RI", 50.0, freqs, s)
    round_trip = 0.0
    parsed = {}
    for fmt in ("RI", "MA", "DB"):
        once = parse_touchstone(serialize_touchstone(record, fmt))
        twice = parse_touchstone(serialize_touchstone(once))
        round_trip = max(round_trip, float(np.max(np.abs(twice.s - once.s))), float(np.max(np.abs(once.s - s))))
        parsed[fmt] = once.s
    cross = max(float(np.max(np.abs(parsed[a] - parsed["RI"]))) for a in ("MA", "DB"))

    tau = 0.2e-9
    f = np.linspace(8e9, 12e9, 81)
    s21 = np.exp(-2j * np.pi * f * tau)
    zero = np.zeros_like(s21)
    delay_record = TouchstoneRecord("GHz", "RI", 50.0, f, np.column_stack([zero, s21, s21, zero]))
    d = group_delay(unwrap_phase(to_response(delay_record, (8.5e9, 11.5e9), 3001)))
    delay_err = abs(float(np.mean(d)) / tau - 1)
    elapsed = time.perf_counter() - start
    ok = round_trip <= 1e-10 and cross <= 1e-10 and delay_err <= 0.01
    detail = (
        f"round-trip error {round_trip:.1e}, format cross error {cross:.1e} (<= 1e-10), "
        f"interpolated pure-delay error {100 * delay_err:.3f}% (<= 1%)"
    )
    return _line("AC8 Touchstone round trip", ok, detail, elapsed, 1.0)


CHECKS = [check_ac1, check_ac2, check_ac3, check_ac4, check_ac5, check_ac6, check_ac7, check_ac8]


@pytest.mark.parametrize("check", CHECKS, ids=[f"AC{i}" for i in range(1, 9)])
def test_acceptance(check):
    assert check()


if __name__ == "__main__":
    results = [check() for check in CHECKS]
    print(f"{sum(results)}/{len(results)} criteria pass")
    sys.exit(0 if all(results) else 1)
