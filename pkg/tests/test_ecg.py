import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import qdyn.ecg as ecg
from qdyn.ecg import (
    DEFAULT_EVENTS,
    EcgEvent,
    EcgParams,
    EcgState,
    add_measurement_noise,
    ecg_field,
    integrate_ecg,
    resample_uniform,
    synthesize_ecg,
    wrap_angle,
)
from qdyn.frame import SignalFrame

QUIET = EcgParams(events=(), z_baseline_amplitude=0.0)


def test_event_validation():
    with pytest.raises(ValueError):
        EcgEvent("R", 0.0, 1.0, 0.0)
    with pytest.raises(ValueError):
        EcgEvent("U", 0.0, 1.0, 0.1)
    with pytest.raises(ValueError):
        EcgEvent("R", -math.pi, 1.0, 0.1)
    with pytest.raises(ValueError):
        EcgParams(omega=0.0)
    with pytest.raises(ValueError):
        EcgParams(form="textbook")


@pytest.mark.parametrize(
    "d, expected", [(0.0, 0.0), (math.pi, math.pi), (-math.pi, math.pi), (1.5 * math.pi, -0.5 * math.pi)]
)
def test_wrap_angle(d, expected):
    assert wrap_angle(d) == pytest.approx(expected, abs=1e-15)


@given(st.floats(-100, 100))
def test_wrap_angle_range(d):
    w = wrap_angle(d)
    assert -math.pi < w <= math.pi
    assert math.cos(w) == pytest.approx(math.cos(d), abs=1e-9)


def test_field_examples():
    assert ecg_field(QUIET, EcgState(1, 0, 0.5, 0))[2] == -0.5
    dx, dy, _ = ecg_field(QUIET, EcgState(1, 0, 0, 0))
    assert (dx, dy) == (0.0, QUIET.omega)
    dx, dy, _ = ecg_field(QUIET, EcgState(2, 0, 0, 0))
    assert (dx, dy) == (-2.0, 2 * QUIET.omega)


def test_field_baseline_and_single_event():
    p = EcgParams(events=(EcgEvent("R", 0.0, 3.0, 0.5),), z_baseline_amplitude=0.2, resp_freq=0.25, form="unweighted")
    # at theta = 0 the unweighted form contributes exactly one unit of drive
    assert ecg_field(p, EcgState(1, 0, 0, 1.0))[2] == pytest.approx(-1.0 + 0.2)
    # the full form weights by a * dth, which vanishes at the event centre
    assert ecg_field(replace(p, form="full"), EcgState(1, 0, 0, 1.0))[2] == pytest.approx(0.2)
    th = 0.3
    expected = -3.0 * th * math.exp(-th * th / 0.5)
    assert ecg_field(replace(p, form="full", z_baseline_amplitude=0.0), EcgState(math.cos(th), math.sin(th), 0, 0))[
        2
    ] == pytest.approx(expected, rel=1e-14)


def test_unweighted_and_full_forms_agree_with_unit_weights(monkeypatch):
    p = EcgParams()
    states = [EcgState(math.cos(t), math.sin(t), 0.1, t) for t in np.linspace(-3, 3, 25)]
    unweighted = [ecg_field(replace(p, form="unweighted"), s) for s in states]
    monkeypatch.setattr(ecg, "_weight", lambda form, ev, dth: 1.0)
    full = [ecg_field(replace(p, form="full"), s) for s in states]
    assert full == unweighted


def test_limit_cycle_from_outside():
    f = integrate_ecg(QUIET, 2.0, 0.0, 0.0, duration=20.0, dt=1e-3)
    assert math.hypot(f["x"][-1], f["y"][-1]) == pytest.approx(1.0, abs=1e-6)
    assert len(f) == 20001 and f.sample_rate == pytest.approx(1000.0)


@settings(max_examples=5, deadline=None)
@given(st.floats(0.1, 3.0), st.floats(-math.pi, math.pi))
def test_limit_cycle_attraction(r, phi):
    f = integrate_ecg(QUIET, r * math.cos(phi), r * math.sin(phi), 0.0, duration=20.0, dt=2e-3)
    assert abs(math.hypot(f["x"][-1], f["y"][-1]) - 1.0) <= 1e-6


def test_z_relaxation_matches_exponential():
    f = integrate_ecg(QUIET, 1.0, 0.0, 1.0, duration=5.0, dt=1e-3)
    assert f["z"][-1] == pytest.approx(math.exp(-5.0), rel=1e-9)
    assert f["z"][-1] == pytest.approx(6.7379e-3, abs=1e-7)
    t = f.t
    assert np.max(np.abs(f["z"] - np.exp(-t))) < 1e-12


def test_rk4_order():
    p = EcgParams()
    finals = [integrate_ecg(p, -1.0, 0.0, 0.0, duration=0.5, dt=dt)["z"][-1] for dt in (4e-3, 2e-3, 1e-3)]
    ratio = abs(finals[0] - finals[1]) / abs(finals[1] - finals[2])
    assert 16 * 0.75 <= ratio <= 16 * 1.25


def test_angular_speed_on_cycle():
    omega = 2 * math.pi * 1.3
    p = replace(QUIET, omega=omega)
    period = 2 * math.pi / omega
    dt = period / 2000
    f = integrate_ecg(p, 1.0, 0.0, 0.0, duration=period, dt=dt)
    theta = np.unwrap(np.arctan2(f["y"], f["x"]))
    assert (theta[-1] - theta[0]) / (2 * math.pi) == pytest.approx(1.0, rel=1e-6)


def test_z_response_is_affine_in_baseline_amplitude():
    base = EcgParams(z_baseline_amplitude=0.0, resp_freq=0.4)
    hom = integrate_ecg(base, -1.0, 0.0, 0.0, duration=2.0, dt=1e-3)["z"]
    one = integrate_ecg(replace(base, z_baseline_amplitude=0.15), -1.0, 0.0, 0.0, duration=2.0, dt=1e-3)["z"]
    two = integrate_ecg(replace(base, z_baseline_amplitude=0.30), -1.0, 0.0, 0.0, duration=2.0, dt=1e-3)["z"]
    assert np.max(np.abs((two - hom) - 2 * (one - hom))) < 1e-12


def test_default_events_give_pqrst_shape():
    f = integrate_ecg(EcgParams(z_baseline_amplitude=0.0), -1.0, 0.0, 0.0, duration=3.0)
    z, th = f["z"][2000:], np.arctan2(f["y"], f["x"])[2000:]
    r = np.argmax(z)
    assert abs(th[r]) < 0.1
    assert 0.5 < z[r] < 2.0
    # Q and S troughs flank the R wave
    near = np.abs(th - th[r]) < 0.6
    assert z[near].min() < 0


def test_integration_rejects_bad_steps():
    with pytest.raises(ValueError):
        integrate_ecg(QUIET, 1, 0, 0, duration=1.0, dt=0.0)
    with pytest.raises(ValueError):
        integrate_ecg(QUIET, 1, 0, 0, duration=1e-4, dt=1e-3)


def test_integration_error_reports_time():
    huge = EcgParams(events=(EcgEvent("R", 0.0, 1e308, 0.1),), z_baseline_amplitude=0.0)
    with pytest.raises(ecg.IntegrationError, match="t="):
        integrate_ecg(huge, math.cos(0.2), math.sin(0.2), 0.0, duration=1.0, dt=0.01)


def zero_frame(n: int) -> SignalFrame:
    return SignalFrame(2000.0, {"z": np.zeros(n), "x": np.arange(n, dtype=float)})


def test_noise_sd_zero_is_identity():
    f = zero_frame(10)
    assert add_measurement_noise(f, "z", 0.0, 1) is f


def test_noise_statistics_and_isolation():
    n = 100_000
    f = add_measurement_noise(zero_frame(n), "z", 0.025, 42)
    z = f["z"]
    assert abs(z.mean()) <= 3 * 0.025 / math.sqrt(n)
    assert z.std(ddof=1) == pytest.approx(0.025, rel=0.02)
    assert np.array_equal(f["x"], np.arange(n, dtype=float))


def test_noise_is_deterministic_per_seed():
    a = add_measurement_noise(zero_frame(1000), "z", 0.025, 7)["z"]
    b = add_measurement_noise(zero_frame(1000), "z", 0.025, 7)["z"]
    c = add_measurement_noise(zero_frame(1000), "z", 0.025, 8)["z"]
    assert np.array_equal(a, b) and not np.array_equal(a, c)


def test_noise_unknown_channel():
    with pytest.raises(KeyError, match="unknown channel"):
        add_measurement_noise(zero_frame(5), "icg", 0.1, 0)


def test_resample_identity_and_ramp():
    f = zero_frame(101)
    same = resample_uniform(f, 2000.0)
    assert np.array_equal(same["x"], f["x"]) and same is not f
    r = resample_uniform(f, 730.0)
    assert np.allclose(r["x"], r.t * 2000.0, rtol=0, atol=1e-9)


def test_resample_sine():
    t = np.arange(2001) / 2000.0
    f = SignalFrame(2000.0, {"s": np.sin(2 * math.pi * 5 * t)})
    r = resample_uniform(f, 500.0)
    assert len(r) == 501
    assert np.max(np.abs(r["s"] - np.sin(2 * math.pi * 5 * r.t))) <= 1e-4


def test_resample_rejects_empty():
    with pytest.raises(ValueError):
        resample_uniform(SignalFrame(10.0, {"z": np.zeros(0)}), 5.0)


def test_synthesize_adds_noise_to_z_only():
    p = EcgParams(noise_sd=0.025, noise_seed=3)
    clean = integrate_ecg(p, -1.0, 0.0, 0.0, duration=0.5)
    noisy = synthesize_ecg(p, 0.5)
    assert np.array_equal(clean["x"], noisy["x"])
    assert 0.015 < np.std(noisy["z"] - clean["z"]) < 0.035
    assert len(DEFAULT_EVENTS) == 5
