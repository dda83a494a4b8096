"""Savitzky-Golay differentiation and per-beat cardiac timing features.

Pipeline: smooth the ECG and locate R peaks; take the minimum of the ECG
second derivative inside a window anchored at each R peak as the R onset;
within each RR interval of the impedance signal, find the maximum of dZ/dt and
take the minimum of d3Z/dt3 at or before it as the B point.  PEP is
``B - R onset``; HR is ``60 / RR``.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .frame import SignalFrame

__all__ = [
    "SgKernel",
    "BeatFeatures",
    "FeatureConfig",
    "BEAT_FIELDS",
    "sg_kernel",
    "convolve_same",
    "detect_r_peaks",
    "detect_r_onset",
    "detect_b_point",
    "compute_beats",
    "square_enhance",
    "extract_features",
]

BEAT_FIELDS = ("t_r_peak", "rr", "hr", "r_onset", "b_point", "pep")


@dataclass(frozen=True, eq=False)
class SgKernel:
    """Correlation weights for the ``deriv_order``-th derivative.

    ``weights[j]`` multiplies the sample at offset ``offsets[j]`` from the
    output index.  For odd lengths the fit is evaluated at the central sample;
    for even lengths it is evaluated half a sample before the output index.
    """

    window_len: int
    poly_order: int
    deriv_order: int
    dt: float
    weights: np.ndarray

    @property
    def offsets(self) -> np.ndarray:
        return np.arange(self.window_len) - self.window_len // 2

    @property
    def abscissae(self) -> np.ndarray:
        return np.arange(self.window_len) - (self.window_len - 1) / 2.0


def sg_kernel(window_len: int, poly_order: int, deriv_order: int = 0, dt: float = 1.0) -> SgKernel:
    if window_len < 1:
        raise ValueError("window_len must be positive")
    if poly_order < 0 or deriv_order < 0:
        raise ValueError("orders must be non-negative")
    if poly_order >= window_len:
        raise ValueError(f"poly_order {poly_order} must be < window_len {window_len}")
    if deriv_order > poly_order:
        raise ValueError("deriv_order must not exceed poly_order")
    if not dt > 0:
        raise ValueError("dt must be positive")
    half = max(1.0, (window_len - 1) / 2.0)
    m = (np.arange(window_len) - (window_len - 1) / 2.0) / half
    vander = np.vander(m, poly_order + 1, increasing=True)
    pinv = np.linalg.pinv(vander)
    weights = math.factorial(deriv_order) * pinv[deriv_order] / (half * dt) ** deriv_order
    return SgKernel(window_len, poly_order, deriv_order, dt, weights)


def convolve_same(signal, k: SgKernel) -> np.ndarray:
    """Apply ``k`` with mirror (reflect, edge not repeated) padding."""
    x = np.asarray(signal, dtype=float)
    if x.ndim != 1 or len(x) < k.window_len:
        raise ValueError(f"signal shorter than kernel ({len(x)} < {k.window_len})")
    left = k.window_len // 2
    right = k.window_len - 1 - left
    if len(x) == 1:
        padded = np.repeat(x, k.window_len)
    else:
        padded = np.pad(x, (left, right), mode="reflect")
    return np.correlate(padded, k.weights, mode="valid")


def detect_r_peaks(
    ecg,
    sample_rate: float,
    min_separation: float = 0.3,
    threshold: float = 0.95,
) -> list[int]:
    """Local maxima above the ``threshold`` quantile, thinned greedily.

    Candidates are accepted in descending amplitude order (ties: lower index)
    if no accepted peak lies closer than ``min_separation`` seconds.
    """
    x = np.asarray(ecg, dtype=float)
    if x.size == 0:
        raise ValueError("empty signal")
    if not min_separation > 0:
        raise ValueError("min_separation must be positive")
    if not 0.0 < threshold < 1.0:
        raise ValueError("threshold quantile must lie in (0, 1)")
    if x.size < 3:
        return []
    level = np.quantile(x, threshold)
    mid = x[1:-1]
    cand = np.flatnonzero((mid > x[:-2]) & (mid >= x[2:]) & (mid > level)) + 1
    order = cand[np.lexsort((cand, -x[cand]))]
    sep = min_separation * sample_rate
    accepted: list[int] = []
    for i in order:
        pos = bisect.bisect_left(accepted, i)
        if pos > 0 and i - accepted[pos - 1] < sep:
            continue
        if pos < len(accepted) and accepted[pos] - i < sep:
            continue
        accepted.insert(pos, int(i))
    return accepted


def detect_r_onset(
    ecg_d2,
    r_peak: int,
    window: tuple[float, float],
    sample_rate: float,
) -> int:
    """Index of the minimum second derivative in ``[r + offset, r + offset + length]``.

    Ties resolve to the earlier index.  A negative offset places the window
    before the R peak, where the Q wave lies.
    """
    d2 = np.asarray(ecg_d2, dtype=float)
    offset, length = window
    lo = r_peak + int(round(offset * sample_rate))
    hi = lo + int(round(length * sample_rate))
    if lo < 0 or hi >= len(d2) or hi < lo:
        raise IndexError(f"R-onset window [{lo}, {hi}] out of bounds for beat at sample {r_peak}")
    return lo + int(np.argmin(d2[lo:hi + 1]))


def detect_b_point(icg_d1, icg_d3, window: tuple[int, int]) -> int:
    """B point inside the beat window ``[start, stop)``.

    Locates the maximum of dZ/dt, then the minimum of d3Z/dt3 on
    ``[start, argmax]``.
    """
    d1 = np.asarray(icg_d1, dtype=float)
    d3 = np.asarray(icg_d3, dtype=float)
    if d1.shape != d3.shape:
        raise ValueError("derivative channels differ in length")
    start, stop = max(0, window[0]), min(len(d1), window[1])
    if stop <= start:
        raise ValueError(f"empty beat window {window}")
    peak = start + int(np.argmax(d1[start:stop]))
    return start + int(np.argmin(d3[start:peak + 1]))


@dataclass(frozen=True)
class BeatFeatures:
    r_peak_t: float
    r_onset_t: Optional[float] = None
    b_point_t: Optional[float] = None
    rr: Optional[float] = None
    hr: Optional[float] = None
    pep: Optional[float] = None

    def row(self) -> tuple:
        return (self.r_peak_t, self.rr, self.hr, self.r_onset_t, self.b_point_t, self.pep)


def compute_beats(
    r_peaks: Sequence[int],
    r_onsets: Sequence[Optional[int]],
    b_points: Sequence[Optional[int]],
    sample_rate: float,
    t0: float = 0.0,
) -> list[BeatFeatures]:
    if not (len(r_peaks) == len(r_onsets) == len(b_points)):
        raise ValueError("per-beat inputs must be aligned")

    def at(i):
        return None if i is None else t0 + i / sample_rate

    beats = []
    for k, (rp, ro, bp) in enumerate(zip(r_peaks, r_onsets, b_points)):
        rr = (rp - r_peaks[k - 1]) / sample_rate if k > 0 else None
        onset_t, b_t = at(ro), at(bp)
        beats.append(
            BeatFeatures(
                r_peak_t=at(rp),
                r_onset_t=onset_t,
                b_point_t=b_t,
                rr=rr,
                hr=60.0 / rr if rr else None,
                pep=b_t - onset_t if onset_t is not None and b_t is not None else None,
            )
        )
    return beats


def square_enhance(signal) -> np.ndarray:
    x = np.asarray(signal, dtype=float)
    return x * x


@dataclass(frozen=True)
class FeatureConfig:
    kernel_len: int = 101
    poly_order: int = 3
    min_separation: float = 0.3
    quantile: float = 0.95
    onset_offset: float = 0.0
    onset_length: float = 0.1


def extract_features(
    frame: SignalFrame,
    ecg_channel: str = "z",
    icg_channel: Optional[str] = None,
    cfg: FeatureConfig = FeatureConfig(),
) -> list[BeatFeatures]:
    fs = frame.sample_rate
    ecg = frame[ecg_channel]

    def kern(d):
        return sg_kernel(cfg.kernel_len, cfg.poly_order, d, frame.dt)

    smooth = convolve_same(ecg, kern(0))
    d2 = convolve_same(ecg, kern(2))
    peaks = detect_r_peaks(smooth, fs, cfg.min_separation, cfg.quantile)

    onsets: list[Optional[int]] = []
    for rp in peaks:
        try:
            onsets.append(detect_r_onset(d2, rp, (cfg.onset_offset, cfg.onset_length), fs))
        except IndexError:
            onsets.append(None)

    b_points: list[Optional[int]] = [None] * len(peaks)
    if icg_channel is not None:
        z = frame[icg_channel]
        d1 = convolve_same(z, kern(1))
        d3 = convolve_same(z, kern(3))
        for k, rp in enumerate(peaks):
            if k + 1 < len(peaks):
                stop = peaks[k + 1]
            elif k > 0:
                stop = rp + int(np.median(np.diff(peaks)))
            else:
                stop = len(z)
            # the last beat's interval may be cut short by the record end
            if stop > len(z):
                continue
            b_points[k] = detect_b_point(d1, d3, (rp, stop))
    return compute_beats(peaks, onsets, b_points, fs, frame.t0)
