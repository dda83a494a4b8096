"""Config parsing and bit-stable file emitters (PGM P5, CSV).

Config format::

    # comment
    [ecg]
    omega = 6.283185307179586
    event = R 0.0 600 0.1

Sections are ``[escape]``, ``[system]``, ``[ecg]`` and ``[features]``.
Unknown sections or keys, duplicate keys (``event`` excepted) and malformed
or non-finite numbers are rejected with the offending line number.
"""
from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .ecg import FORMS, EcgEvent, EcgParams
from .features import BEAT_FIELDS, BeatFeatures, FeatureConfig
from .frame import SignalFrame
from .raster import MODES, EscapeGrid

__all__ = [
    "ConfigError",
    "RunConfig",
    "parse_config",
    "load_config",
    "format_config",
    "pgm_bytes",
    "write_pgm",
    "read_pgm",
    "format_number",
    "write_csv",
    "write_frame_csv",
    "write_beats_csv",
    "read_csv",
    "read_frame_csv",
]

STYLES = ("binary", "grayscale")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        super().__init__(f"line {line}: {message}" if line is not None else message)
        self.line = line


def _enum(*choices: str) -> Callable[[str], str]:
    def conv(text: str) -> str:
        if text not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}, got {text!r}")
        return text

    conv.__name__ = "enum"
    return conv


def _real(text: str) -> float:
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"non-finite number {text!r}")
    return v


def _int(text: str) -> int:
    return int(text)


def _word(text: str) -> str:
    if not text or any(c.isspace() for c in text):
        raise ValueError(f"expected a single word, got {text!r}")
    return text


SCHEMA: dict[str, dict[str, Callable[[str], Any]]] = {
    "escape": {
        "mode": _enum(*MODES),
        "k": _real,
        "alpha": _real,
        "radius": _real,
        "pixels": _int,
        "iters": _int,
        "threshold": _real,
        "style": _enum(*STYLES),
    },
    "system": {"a": _real, "b": _real, "sigma": _real, "x0": _real, "y0": _real, "steps": _int},
    "ecg": {
        "omega": _real,
        "baseline_amplitude": _real,
        "resp_freq": _real,
        "form": _enum(*FORMS),
        "noise_sd": _real,
        "noise_seed": _int,
        "x0": _real,
        "y0": _real,
        "z0": _real,
    },
    "features": {
        "kernel_len": _int,
        "poly_order": _int,
        "min_separation": _real,
        "quantile": _real,
        "onset_offset": _real,
        "onset_length": _real,
        "ecg_channel": _word,
        "icg_channel": _word,
    },
}


@dataclass
class RunConfig:
    escape: dict[str, Any] = field(default_factory=dict)
    system: dict[str, Any] = field(default_factory=dict)
    ecg: dict[str, Any] = field(default_factory=dict)
    features: dict[str, Any] = field(default_factory=dict)
    events: list[EcgEvent] = field(default_factory=list)

    def section(self, name: str) -> dict[str, Any]:
        return getattr(self, name)

    def ecg_params(self) -> EcgParams:
        if not self.events:
            raise ConfigError("[ecg] needs at least one 'event = LABEL theta a b' line")
        e = self.ecg
        return EcgParams(
            omega=e.get("omega", 2.0 * math.pi),
            events=tuple(self.events),
            z_baseline_amplitude=e.get("baseline_amplitude", 0.15),
            resp_freq=e.get("resp_freq", 0.25),
            form=e.get("form", "full"),
            noise_sd=e.get("noise_sd", 0.0),
            noise_seed=e.get("noise_seed", 0),
        )

    def ecg_start(self) -> tuple[float, float, float]:
        return (self.ecg.get("x0", -1.0), self.ecg.get("y0", 0.0), self.ecg.get("z0", 0.0))

    def feature_config(self) -> FeatureConfig:
        keys = FeatureConfig.__dataclass_fields__
        return FeatureConfig(**{k: v for k, v in self.features.items() if k in keys})


def _parse_event(value: str, lineno: int) -> EcgEvent:
    parts = value.split()
    if len(parts) != 4:
        raise ConfigError("event needs 'LABEL theta a b'", lineno)
    try:
        theta, a, b = (_real(p) for p in parts[1:])
        return EcgEvent(parts[0], theta, a, b)
    except ValueError as exc:
        raise ConfigError(f"bad event: {exc}", lineno) from None


def parse_config(text: str) -> RunConfig:
    cfg = RunConfig()
    section: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", lineno)
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if section is None:
            raise ConfigError(f"key {key!r} outside any section", lineno)
        if section == "ecg" and key == "event":
            cfg.events.append(_parse_event(value, lineno))
            continue
        conv = SCHEMA[section].get(key)
        if conv is None:
            raise ConfigError(f"unknown key {key!r} in [{section}]", lineno)
        target = cfg.section(section)
        if key in target:
            raise ConfigError(f"duplicate key {key!r} in [{section}]", lineno)
        try:
            target[key] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
    return cfg


def load_config(path: str | os.PathLike) -> RunConfig:
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())


def format_config(cfg: RunConfig) -> str:
    """Render ``cfg`` so that ``parse_config`` reproduces it exactly."""
    out: list[str] = []
    for name in SCHEMA:
        values = cfg.section(name)
        if not values and not (name == "ecg" and cfg.events):
            continue
        out.append(f"[{name}]")
        for key, val in values.items():
            out.append(f"{key} = {val!r}" if isinstance(val, float) else f"{key} = {val}")
        if name == "ecg":
            for ev in cfg.events:
                out.append(f"event = {ev.label} {ev.theta!r} {ev.a!r} {ev.b!r}")
        out.append("")
    return "\n".join(out)


def pgm_bytes(grid: EscapeGrid, style: str = "binary") -> bytes:
    if style not in STYLES:
        raise ValueError(f"style must be one of {STYLES}")
    codes = grid.cells.astype(np.int64)
    if style == "binary":
        pix = np.where(codes == 0, 255, 0)
    else:
        span = max(1, grid.spec.iters - 1)
        pix = np.where(codes == 0, 255, (200 * (codes - 1)) // span)
    h, w = codes.shape
    return f"P5\n{w} {h}\n255\n".encode("ascii") + pix.astype(np.uint8).tobytes()


def write_pgm(grid: EscapeGrid, style: str, path: str | os.PathLike) -> None:
    data = pgm_bytes(grid, style)
    with open(path, "wb") as fh:
        fh.write(data)


def read_pgm(path: str | os.PathLike) -> np.ndarray:
    """Read an 8-bit P5 file with the three-line header written above."""
    with open(path, "rb") as fh:
        data = fh.read()
    magic, dims, maxval, body = data.split(b"\n", 3)
    if magic != b"P5" or maxval != b"255":
        raise ValueError("not an 8-bit P5 file")
    w, h = (int(v) for v in dims.split())
    return np.frombuffer(body, dtype=np.uint8, count=w * h).reshape(h, w)


def format_number(v) -> str:
    if v is None:
        return "nan"
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def write_csv(path: str | os.PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    rows = list(rows)
    if not rows:
        raise ValueError("refusing to write an empty table")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_number(v) for v in row])
    with open(path, "w", encoding="ascii", newline="") as fh:
        fh.write(buf.getvalue())


def write_frame_csv(frame: SignalFrame, path: str | os.PathLike) -> None:
    names = list(frame.channels)
    cols = [frame.t] + [frame[n] for n in names]
    rows = zip(*(c.tolist() for c in cols))
    write_csv(path, ["t", *names], rows)


def write_beats_csv(beats: Sequence[BeatFeatures], path: str | os.PathLike) -> None:
    write_csv(path, BEAT_FIELDS, (b.row() for b in beats))


def read_csv(path: str | os.PathLike) -> tuple[list[str], np.ndarray]:
    with open(path, newline="", encoding="ascii") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        data = [[float(v) for v in row] for row in reader if row]
    return header, np.array(data, dtype=float).reshape(len(data), len(header))


def read_frame_csv(path: str | os.PathLike, sample_rate: float | None = None) -> SignalFrame:
    """Load a CSV as a frame; the rate comes from ``sample_rate`` or the ``t`` column."""
    header, data = read_csv(path)
    chans = {name: data[:, i] for i, name in enumerate(header) if name != "t"}
    t0 = 0.0
    if "t" in header:
        t = data[:, header.index("t")]
        t0 = float(t[0]) if len(t) else 0.0
        if sample_rate is None and len(t) > 1:
            sample_rate = (len(t) - 1) / float(t[-1] - t[0])
    if sample_rate is None:
        raise ValueError("sample rate unknown: pass it explicitly or include a 't' column")
    return SignalFrame(sample_rate, chans, t0)
