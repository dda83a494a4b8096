"""Command-line entry point: ``qdyn <subcommand> [flags]``.

Exit status is 0 on success, 1 on usage errors (bad flags, bad config) and
2 on runtime failures.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import __version__
from .dynamics import MapParams, SystemParams, iterate_orbit, iterate_system, linear_roots, classify_linear
from .ecg import integrate_ecg, add_measurement_noise, resample_uniform
from .features import FeatureConfig, extract_features
from .io import (
    STYLES,
    ConfigError,
    RunConfig,
    load_config,
    read_frame_csv,
    write_beats_csv,
    write_csv,
    write_frame_csv,
    format_number,
    write_pgm,
)
from .raster import MODES, GridSpec, default_workers, render_escape_grid, white_fraction
from .stability import stability_report

THREADS_ENV = "QDYN_THREADS"


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _finite(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"invalid number: {text!r}") from None
    if not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"non-finite number: {text!r}")
    return v


def _positive(text: str) -> float:
    v = _finite(text)
    if v <= 0:
        raise argparse.ArgumentTypeError(f"must be positive: {text!r}")
    return v


def _count(minimum: int):
    def conv(text: str) -> int:
        try:
            v = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"invalid integer: {text!r}") from None
        if v < minimum:
            raise argparse.ArgumentTypeError(f"must be >= {minimum}: {text!r}")
        return v

    return conv


def _alpha(text: str) -> float:
    v = _finite(text)
    if not 0 < v <= 2:
        raise argparse.ArgumentTypeError(f"must lie in (0, 2]: {text!r}")
    return v


def _fmt(v: float) -> str:
    return format(v, ".12g")


def _fmt_complex(z: complex) -> str:
    if z.imag == 0:
        return _fmt(z.real)
    sign = "+" if z.imag >= 0 else "-"
    return f"{_fmt(z.real)}{sign}{_fmt(abs(z.imag))}i"


def _fmt_exact(v: float) -> str:
    """Small-denominator fraction when it reproduces ``v`` to 1e-12, else 12 digits."""
    frac = Fraction(v).limit_denominator(100000)
    if abs(float(frac) - v) <= 1e-12 * max(1.0, abs(v)):
        return str(frac)
    return _fmt(v)


def _merge(args: argparse.Namespace, section: dict, defaults: dict) -> dict:
    """Flag value if given, else config value, else default."""
    out = {}
    for key, default in defaults.items():
        flag = getattr(args, key, None)
        out[key] = flag if flag is not None else section.get(key, default)
    return out


def _config(args) -> RunConfig:
    if getattr(args, "config", None) is None:
        return RunConfig()
    try:
        return load_config(args.config)
    except ConfigError as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    except OSError as exc:
        raise UsageError(f"--config: {exc}") from None


def _threads(args) -> int:
    env = os.environ.get(THREADS_ENV)
    if env is not None:
        try:
            n = int(env)
        except ValueError:
            n = 0
        if n < 1:
            raise UsageError(f"{THREADS_ENV} must be a positive integer, got {env!r}")
        return n
    return args.threads if args.threads is not None else default_workers()


def cmd_escape(args) -> int:
    cfg = _config(args).escape
    v = _merge(
        args,
        cfg,
        dict(mode="polar", k=1.0, alpha=2.0, radius=2.0, pixels=256, iters=30, threshold=2.0, style="binary"),
    )
    style = v.pop("style")
    try:
        spec = GridSpec(**v)
    except ValueError as exc:
        raise UsageError(f"invalid escape parameters: {exc}") from None
    grid = render_escape_grid(spec, workers=_threads(args))
    write_pgm(grid, style, args.out)
    if args.counts_out:
        n = spec.pixels
        ii, jj = np.indices((n, n))
        write_csv(args.counts_out, ["i", "j", "code"], zip(ii.ravel().tolist(), jj.ravel().tolist(), grid.cells.ravel().tolist()))
    print(f"white_fraction {_fmt(white_fraction(grid))}")
    return 0


def _emit(path, header, rows):
    if path:
        write_csv(path, header, rows)
    else:
        print(",".join(header))
        for row in rows:
            print(",".join(format_number(x) for x in row))


def cmd_orbit(args) -> int:
    p = MapParams(args.a, args.b, args.alpha)
    orbit = iterate_orbit(p, args.x_prev, args.x0, args.steps)
    rows = [(0, args.x0)] + [(n, x) for n, x in enumerate(orbit.values, start=1)]
    _emit(args.out, ["n", "x"], rows)
    if orbit.diverged_at is not None:
        print(f"orbit diverged (non-finite) at step {orbit.diverged_at}", file=sys.stderr)
    return 0


def cmd_linear(args) -> int:
    la = linear_roots(args.a, args.b)
    print(f"roots: {_fmt_complex(la.lambda1)}, {_fmt_complex(la.lambda2)}")
    print(f"spectral_radius: {_fmt(la.spectral_radius)}")
    print(f"classification: {classify_linear(args.a, args.b).label}")
    return 0


def cmd_stability(args) -> int:
    reports = stability_report(SystemParams(args.a, args.b, args.sigma))
    if not reports:
        print("no real fixed points")
    for r in reports:
        x, y = r.location
        print(f"({_fmt_exact(x)}, {_fmt_exact(y)}): {r.label}")
        eig = ", ".join(_fmt_complex(z) for z in r.eigenvalues)
        print(f"  x = {_fmt(x)}, y = {_fmt(y)}, eigenvalues = {eig}")
    return 0


def _system_params(args) -> tuple[SystemParams, dict]:
    v = _merge(args, _config(args).system, dict(a=0.15, b=0.45, sigma=-0.45, x0=0.07, y0=0.08, steps=500))
    return SystemParams(v["a"], v["b"], v["sigma"]), v


def cmd_system(args) -> int:
    p, v = _system_params(args)
    traj = iterate_system(p, v["x0"], v["y0"], v["steps"])
    rows = [(0, float(v["x0"]), float(v["y0"]))] + [(s.t, s.x, s.y) for s in traj.states]
    _emit(args.out, ["t", "x", "y"], rows)
    if traj.diverged_at is not None:
        print(f"system orbit diverged at step {traj.diverged_at}", file=sys.stderr)
    return 0


def cmd_phase(args) -> int:
    p = SystemParams(args.a, args.b, args.sigma)
    axis = np.linspace(-args.extent, args.extent, args.grid_n).tolist()
    rows = []
    traj_id = 0
    for y0 in axis:
        for x0 in axis:
            traj = iterate_system(p, x0, y0, args.steps)
            rows.append((traj_id, 0, x0, y0))
            rows.extend((traj_id, s.t, s.x, s.y) for s in traj.states)
            traj_id += 1
    _emit(args.out, ["traj", "t", "x", "y"], rows)
    return 0


def cmd_ecg_synth(args) -> int:
    cfg = _config(args)
    try:
        params = cfg.ecg_params()
    except (ConfigError, ValueError) as exc:
        raise UsageError(f"{args.config}: {exc}") from None
    frame = integrate_ecg(params, *cfg.ecg_start(), duration=args.duration, dt=args.dt)
    frame = add_measurement_noise(frame, "z", params.noise_sd, params.noise_seed)
    if args.rate is not None:
        frame = resample_uniform(frame, args.rate)
    write_frame_csv(frame, args.out)
    return 0


def cmd_ecg_features(args) -> int:
    rc = _config(args)
    defaults = {k: f.default for k, f in FeatureConfig.__dataclass_fields__.items()}
    v = _merge(args, rc.features, defaults)
    fcfg = FeatureConfig(**v)
    if fcfg.poly_order >= fcfg.kernel_len:
        raise UsageError(f"--poly-order {fcfg.poly_order} must be < --kernel-len {fcfg.kernel_len}")
    if fcfg.poly_order < 2:
        raise UsageError("--poly-order must be >= 2 for the ECG second derivative")
    if not 0 < fcfg.quantile < 1:
        raise UsageError(f"--quantile must lie in (0, 1), got {fcfg.quantile}")
    ecg_channel = args.ecg_channel or rc.features.get("ecg_channel", "z")
    icg_channel = args.icg_channel or rc.features.get("icg_channel")
    if icg_channel and fcfg.poly_order < 3:
        raise UsageError("--poly-order must be >= 3 to take the third ICG derivative")
    try:
        frame = read_frame_csv(args.input, args.rate)
    except OSError as exc:
        raise UsageError(f"--in: {exc}") from None
    for name in filter(None, (ecg_channel, icg_channel)):
        if name not in frame.channels:
            raise UsageError(f"--in: no channel {name!r} (have {', '.join(frame.channels)})")
    beats = extract_features(frame, ecg_channel, icg_channel, fcfg)
    if not beats:
        print("no R peaks detected", file=sys.stderr)
        return 2
    write_beats_csv(beats, args.out)
    hrs = [b.hr for b in beats if b.hr is not None]
    print(f"beats {len(beats)}" + (f" mean_hr {_fmt(float(np.mean(hrs)))}" if hrs else ""))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qdyn", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("escape", help="render an escape-time raster to PGM")
    p.add_argument("--config")
    p.add_argument("--mode", choices=MODES)
    p.add_argument("--k", type=_finite)
    p.add_argument("--alpha", type=_alpha)
    p.add_argument("--radius", type=_positive)
    p.add_argument("--pixels", type=_count(2))
    p.add_argument("--iters", type=_count(1))
    p.add_argument("--threshold", type=_positive)
    p.add_argument("--style", choices=STYLES)
    p.add_argument("--out", required=True)
    p.add_argument("--counts-out")
    p.add_argument("--threads", type=_count(1))
    p.set_defaults(func=cmd_escape)

    p = sub.add_parser("orbit", help="iterate the scalar map")
    p.add_argument("--a", type=_finite, required=True)
    p.add_argument("--b", type=_finite, required=True)
    p.add_argument("--alpha", type=_alpha, default=2.0)
    p.add_argument("--x-prev", type=_finite, default=0.0)
    p.add_argument("--x0", type=_finite, required=True)
    p.add_argument("--steps", type=_count(1), default=30)
    p.add_argument("--out")
    p.set_defaults(func=cmd_orbit)

    p = sub.add_parser("linear", help="characteristic roots of the linear case")
    p.add_argument("--a", type=_finite, required=True)
    p.add_argument("--b", type=_finite, required=True)
    p.set_defaults(func=cmd_linear)

    p = sub.add_parser("stability", help="fixed points of the coupled map and their type")
    p.add_argument("--a", type=_finite, required=True)
    p.add_argument("--b", type=_finite, required=True)
    p.add_argument("--sigma", type=_finite, default=1.0)
    p.set_defaults(func=cmd_stability)

    p = sub.add_parser("system", help="iterate the coupled map")
    p.add_argument("--config")
    p.add_argument("--a", type=_finite)
    p.add_argument("--b", type=_finite)
    p.add_argument("--sigma", type=_finite)
    p.add_argument("--x0", type=_finite)
    p.add_argument("--y0", type=_finite)
    p.add_argument("--steps", type=_count(1))
    p.add_argument("--out")
    p.set_defaults(func=cmd_system)

    p = sub.add_parser("phase", help="trajectory bundle on a grid of initial conditions")
    p.add_argument("--a", type=_finite, required=True)
    p.add_argument("--b", type=_finite, required=True)
    p.add_argument("--sigma", type=_finite, default=1.0)
    p.add_argument("--grid-n", type=_count(1), default=10)
    p.add_argument("--extent", type=_positive, default=1.0)
    p.add_argument("--steps", type=_count(1), default=50)
    p.add_argument("--out")
    p.set_defaults(func=cmd_phase)

    p = sub.add_parser("ecg-synth", help="integrate the synthetic ECG model")
    p.add_argument("--config", required=True)
    p.add_argument("--duration", type=_positive, default=10.0)
    p.add_argument("--dt", type=_positive, default=5e-4)
    p.add_argument("--rate", type=_positive)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ecg_synth)

    p = sub.add_parser("ecg-features", help="per-beat R peak, R onset, B point, RR, HR, PEP")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--config")
    p.add_argument("--rate", type=_positive)
    p.add_argument("--kernel-len", type=_count(1))
    p.add_argument("--poly-order", type=_count(0))
    p.add_argument("--min-separation", type=_positive)
    p.add_argument("--quantile", type=_finite)
    p.add_argument("--onset-offset", type=_finite)
    p.add_argument("--onset-length", type=_positive)
    p.add_argument("--ecg-channel")
    p.add_argument("--icg-channel")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_ecg_features)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:  # noqa: BLE001 - every failure maps to exit status 2
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
