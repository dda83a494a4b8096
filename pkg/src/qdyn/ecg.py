"""Three-variable synthetic ECG generator.

The ``(x, y)`` pair moves on an attracting unit limit cycle with angular
velocity ``omega``; ``z`` (mV) is driven by Gaussian events placed at fixed
angles and relaxes to the baseline ``z0(t) = A sin(2 pi f2 t)``::

    dx/dt = g x - omega y,        g = 1 - sqrt(x**2 + y**2)
    dy/dt = g y + omega x
    dz/dt = -sum_i w_i exp(-dth_i**2 / (2 b_i**2)) - (z - z0(t))

with ``dth_i`` the angle to event ``i`` wrapped into ``(-pi, pi]``.  The
``unweighted`` form uses ``w_i = 1``; the ``full`` form uses ``w_i = a_i dth_i``,
which produces the biphasic PQRST morphology.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .frame import SignalFrame

__all__ = [
    "LABELS",
    "FORMS",
    "EcgEvent",
    "EcgParams",
    "EcgState",
    "DEFAULT_EVENTS",
    "IntegrationError",
    "wrap_angle",
    "ecg_field",
    "integrate_ecg",
    "add_measurement_noise",
    "resample_uniform",
    "synthesize_ecg",
]

LABELS = ("P", "Q", "R", "S", "T")
FORMS = ("unweighted", "full")
TWO_PI = 2.0 * math.pi


class IntegrationError(ArithmeticError):
    def __init__(self, t: float):
        super().__init__(f"non-finite ECG state at t={t:.6g} s")
        self.t = t


@dataclass(frozen=True)
class EcgEvent:
    label: str
    theta: float
    a: float
    b: float

    def __post_init__(self):
        if self.label not in LABELS:
            raise ValueError(f"event label must be one of {LABELS}, got {self.label!r}")
        if not self.b > 0:
            raise ValueError("event width b must be positive")
        if not (-math.pi < self.theta <= math.pi):
            raise ValueError("event angle must lie in (-pi, pi]")


# Tuning defaults giving an R wave near 1 mV at omega = 2 pi; not measured values.
DEFAULT_EVENTS = (
    EcgEvent("P", math.radians(-70.0), 24.0, 0.25),
    EcgEvent("Q", math.radians(-15.0), -100.0, 0.1),
    EcgEvent("R", 0.0, 600.0, 0.1),
    EcgEvent("S", math.radians(15.0), -150.0, 0.1),
    EcgEvent("T", math.radians(100.0), 15.0, 0.4),
)


@dataclass(frozen=True)
class EcgParams:
    omega: float = TWO_PI
    events: tuple[EcgEvent, ...] = DEFAULT_EVENTS
    z_baseline_amplitude: float = 0.15
    resp_freq: float = 0.25
    form: str = "full"
    noise_sd: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "events", tuple(self.events))
        if not self.omega > 0:
            raise ValueError("omega must be positive")
        if not self.resp_freq >= 0:
            raise ValueError("resp_freq must be non-negative")
        if not self.noise_sd >= 0:
            raise ValueError("noise_sd must be non-negative")
        if self.form not in FORMS:
            raise ValueError(f"form must be one of {FORMS}")

    def baseline(self, t: float) -> float:
        return self.z_baseline_amplitude * math.sin(TWO_PI * self.resp_freq * t)


@dataclass(frozen=True)
class EcgState:
    x: float
    y: float
    z: float
    t: float = 0.0


def wrap_angle(d: float) -> float:
    """Map an angle difference into ``(-pi, pi]``."""
    d = d % TWO_PI
    return d - TWO_PI if d > math.pi else d


def _weight(form: str, ev: EcgEvent, dth: float) -> float:
    return ev.a * dth if form == "full" else 1.0


def ecg_field(p: EcgParams, s: EcgState) -> tuple[float, float, float]:
    g = 1.0 - math.sqrt(s.x * s.x + s.y * s.y)
    theta = math.atan2(s.y, s.x)
    drive = 0.0
    for ev in p.events:
        dth = wrap_angle(theta - ev.theta)
        drive += _weight(p.form, ev, dth) * math.exp(-dth * dth / (2.0 * ev.b * ev.b))
    dz = -drive - (s.z - p.baseline(s.t))
    return g * s.x - p.omega * s.y, g * s.y + p.omega * s.x, dz


def integrate_ecg(
    p: EcgParams,
    x0: float,
    y0: float,
    z0: float,
    duration: float,
    dt: float = 5e-4,
) -> SignalFrame:
    """Fixed-step classical RK4 from ``t = 0``.

    Returns channels ``x``, ``y``, ``z`` sampled at every step including the
    initial state, with ``sample_rate = 1/dt``.
    """
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not duration >= dt:
        raise ValueError("duration must be >= dt")
    n = int(round(duration / dt))
    out = np.empty((n + 1, 3))
    x, y, z = float(x0), float(y0), float(z0)
    out[0] = x, y, z
    h2 = 0.5 * dt
    for k in range(n):
        t = k * dt
        k1 = ecg_field(p, EcgState(x, y, z, t))
        k2 = ecg_field(p, EcgState(x + h2 * k1[0], y + h2 * k1[1], z + h2 * k1[2], t + h2))
        k3 = ecg_field(p, EcgState(x + h2 * k2[0], y + h2 * k2[1], z + h2 * k2[2], t + h2))
        k4 = ecg_field(p, EcgState(x + dt * k3[0], y + dt * k3[1], z + dt * k3[2], t + dt))
        x += dt / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0])
        y += dt / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1])
        z += dt / 6.0 * (k1[2] + 2.0 * k2[2] + 2.0 * k3[2] + k4[2])
        if not (math.isfinite(x) and math.isfinite(y) and math.isfinite(z)):
            raise IntegrationError((k + 1) * dt)
        out[k + 1] = x, y, z
    return SignalFrame(1.0 / dt, {"x": out[:, 0], "y": out[:, 1], "z": out[:, 2]})


def add_measurement_noise(frame: SignalFrame, channel: str, sd: float, seed: int) -> SignalFrame:
    """Add i.i.d. N(0, sd**2) samples to one channel.

    Samples come from numpy's ziggurat normal sampler driven by the
    counter-based Philox generator keyed by ``seed``.
    """
    if not sd >= 0:
        raise ValueError("sd must be non-negative")
    values = frame[channel]
    if sd == 0:
        return frame
    rng = np.random.Generator(np.random.Philox(seed))
    return frame.with_channel(channel, values + sd * rng.standard_normal(len(values)))


def resample_uniform(frame: SignalFrame, target_rate: float) -> SignalFrame:
    """Linearly interpolate every channel onto a uniform grid at ``target_rate``."""
    if not target_rate > 0:
        raise ValueError("target_rate must be positive")
    n = len(frame)
    if n == 0:
        raise ValueError("empty frame")
    if target_rate == frame.sample_rate:
        return SignalFrame(frame.sample_rate, dict(frame.channels), frame.t0)
    span = (n - 1) / frame.sample_rate
    m = int(math.floor(span * target_rate + 1e-9)) + 1
    src = np.arange(n) / frame.sample_rate
    dst = np.arange(m) / target_rate
    chans = {k: np.interp(dst, src, v) for k, v in frame.channels.items()}
    return SignalFrame(target_rate, chans, frame.t0)


def synthesize_ecg(
    p: EcgParams,
    duration: float,
    dt: float = 5e-4,
    start: Sequence[float] = (-1.0, 0.0, 0.0),
) -> SignalFrame:
    """Integrate the model and add the configured measurement noise to ``z``."""
    frame = integrate_ecg(p, *start, duration=duration, dt=dt)
    return add_measurement_noise(frame, "z", p.noise_sd, p.noise_seed)
