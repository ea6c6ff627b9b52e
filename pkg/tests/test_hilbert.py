import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.special import dawsn

from mwhilbert.errors import DomainError, ValidationError
from mwhilbert.hilbert import (
    RECT,
    TRI,
    AnalyticPulse,
    envelope,
    hilbert_pv_quadrature,
    hilbert_spectral,
    rect_hilbert_closed_form,
    tri_hilbert_closed_form,
)
from mwhilbert.spectral import TimeSignal

POINTS = [0.0, 0.5, -0.5, 2.0, -2.0, 5.0, -5.0]


def _band_limited(seed, n=2048, kmax=200):
    """Random real signal with only bins 1..kmax populated (zero mean, no Nyquist)."""
    rng = np.random.default_rng(seed)
    spec = np.zeros(n // 2 + 1, dtype=complex)
    spec[1 : kmax + 1] = rng.standard_normal(kmax) + 1j * rng.standard_normal(kmax)
    return TimeSignal(0.0, 1.0, np.fft.irfft(spec, n))


def test_pulse_shapes():
    t = np.array([-1.5, -1.0, -0.5, 0.0, 0.5, 1.0, 1.5])
    np.testing.assert_array_equal(RECT(t), [0, 1, 1, 1, 1, 1, 0])
    np.testing.assert_allclose(TRI(t), [0, 0, 0.5, 1, 0.5, 0, 0])
    with pytest.raises(ValidationError):
        AnalyticPulse("sinc")


def test_cosine_maps_to_sine():
    n = 1000
    t = np.arange(n) / n
    out = hilbert_spectral(TimeSignal(0.0, float(n), np.cos(2 * np.pi * 7 * t)))
    assert np.max(np.abs(out.samples - np.sin(2 * np.pi * 7 * t))) <= 1e-10


def test_constant_maps_to_zero():
    out = hilbert_spectral(TimeSignal(0.0, 1.0, np.full(64, 3.0)))
    assert np.max(np.abs(out.samples)) < 1e-15


def test_output_real_for_real_input():
    assert hilbert_spectral(_band_limited(1)).is_real


def test_complex_input_matches_real_path():
    x = _band_limited(2)
    real_out = hilbert_spectral(x).samples
    complex_out = hilbert_spectral(x.with_samples(x.samples.astype(complex))).samples
    np.testing.assert_allclose(complex_out.real, real_out, atol=1e-12)
    assert np.max(np.abs(complex_out.imag)) < 1e-12


@pytest.mark.parametrize("seed", range(20))
def test_involution(seed):
    x = _band_limited(seed)
    twice = hilbert_spectral(hilbert_spectral(x)).samples
    assert np.linalg.norm(twice + x.samples) / np.linalg.norm(x.samples) <= 1e-9


@settings(max_examples=30, deadline=None)
@given(a=st.floats(-10, 10), b=st.floats(-10, 10), s1=st.integers(0, 1000), s2=st.integers(0, 1000))
def test_linearity(a, b, s1, s2):
    x, y = _band_limited(s1, 256, 40).samples, _band_limited(s2, 256, 40).samples
    sig = TimeSignal(0.0, 1.0, x)
    lhs = hilbert_spectral(sig.with_samples(a * x + b * y)).samples
    rhs = a * hilbert_spectral(sig).samples + b * hilbert_spectral(sig.with_samples(y)).samples
    assert np.max(np.abs(lhs - rhs)) <= 1e-12 * (1 + abs(a) + abs(b)) * 10


def test_even_pulse_gives_odd_output():
    n = 4096
    t = (np.arange(n) - n // 2) / 256
    for pulse in (RECT, TRI):
        out = hilbert_spectral(TimeSignal(t[0], 256.0, pulse(t))).samples
        # sample n//2 is t = 0; mirror about it
        np.testing.assert_allclose(out[1:][::-1], -out[1:], atol=1e-12)


def test_envelope_of_modulated_tone():
    n = 2048
    t = np.arange(n) / n
    env = envelope(TimeSignal(0.0, float(n), 0.7 * np.cos(2 * np.pi * 100 * t)))
    np.testing.assert_allclose(env, 0.7, atol=1e-12)


def test_rect_closed_form():
    assert rect_hilbert_closed_form(2.0) == pytest.approx(math.log(3) / math.pi)
    assert rect_hilbert_closed_form(1.0) == math.inf
    assert rect_hilbert_closed_form(-1.0) == -math.inf
    t = np.linspace(0.01, 7, 300)
    np.testing.assert_allclose(rect_hilbert_closed_form(-t), -rect_hilbert_closed_form(t))


def test_tri_closed_form_limits_and_literal_agreement():
    assert tri_hilbert_closed_form(0.0) == 0.0
    assert tri_hilbert_closed_form(1.0) == pytest.approx(2 * math.log(2) / math.pi)
    t = np.array([-3.2, -0.7, -0.2, 0.3, 0.6, 1.7, 4.0])
    literal = -(np.log(np.abs((t - 1) / (t + 1))) + t * np.log(np.abs(t**2 / (t**2 - 1)))) / np.pi
    np.testing.assert_allclose(tri_hilbert_closed_form(t), literal, atol=1e-14)
    np.testing.assert_allclose(tri_hilbert_closed_form(-t), -tri_hilbert_closed_form(t), atol=1e-15)


def test_tri_far_field_decay():
    t = 50.0
    assert math.pi * t * hilbert_pv_quadrature(TRI, t) == pytest.approx(1.0, rel=0.02)


@pytest.mark.parametrize("t", POINTS)
def test_pv_matches_rect_closed_form(t):
    assert hilbert_pv_quadrature(RECT, t) == pytest.approx(float(rect_hilbert_closed_form(t)), abs=1e-6)


@pytest.mark.parametrize("t", POINTS)
def test_pv_matches_tri_closed_form(t):
    assert hilbert_pv_quadrature(TRI, t) == pytest.approx(float(tri_hilbert_closed_form(t)), abs=1e-6)


def test_pv_known_values():
    assert hilbert_pv_quadrature(RECT, 0.0) == pytest.approx(0.0, abs=1e-12)
    assert hilbert_pv_quadrature(RECT, 2.0) == pytest.approx(0.3497, abs=1e-4)
    assert hilbert_pv_quadrature(TRI, 0.0) == pytest.approx(0.0, abs=1e-12)


def test_pv_rejects_rect_pole_and_bad_epsilon():
    with pytest.raises(DomainError):
        hilbert_pv_quadrature(RECT, 1.0)
    with pytest.raises(DomainError):
        hilbert_pv_quadrature(TRI, 0.3, epsilon=0.0)


def test_pv_on_sampled_signal_matches_spectral_oracle():
    fs = 64.0
    t = np.arange(-512, 512) / fs
    x = np.exp(-(t**2))
    # closed form for a Gaussian: H[exp(-t^2)](t) = 2/sqrt(pi) * dawsn(t)
    got = hilbert_pv_quadrature(TimeSignal(t[0], fs, x), 0.8, epsilon=0.05)
    assert got == pytest.approx(2 / math.sqrt(math.pi) * dawsn(0.8), abs=1e-3)


def _smoothed_rect(rise, fs=512.0, half_span=256.0):
    """Rectangle with raised-cosine edges of the given rise time, on a long periodic grid."""
    t = np.arange(-half_span, half_span, 1 / fs)
    u = np.clip((1 + rise / 2 - np.abs(t)) / rise, 0.0, 1.0)
    return TimeSignal(t[0], fs, 0.5 - 0.5 * np.cos(np.pi * u)), t


def test_band_limited_rect_converges_to_closed_form():
    errs = []
    for rise in (0.2, 0.1):
        sig, t = _smoothed_rect(rise)
        out = hilbert_spectral(sig).samples
        idx = [int(np.argmin(np.abs(t - p))) for p in (0.5, 2.0)]
        errs.append(max(abs(out[i] - float(rect_hilbert_closed_form(t[i]))) for i in idx))
    assert errs[1] <= 0.55 * errs[0]
