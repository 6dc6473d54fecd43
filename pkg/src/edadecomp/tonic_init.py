"""Valley detection and the spline-based initial tonic estimate."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.signal import find_peaks, peak_prominences

from .preprocess import PipelineConfig, Signal

DETECTED = "detected"
BOUNDARY = "boundary"
WINDOW_FILL = "window_fill"


@dataclass(frozen=True, eq=False)
class ValleySet:
    """Spline control points: sample indices and how each was obtained."""

    indices: np.ndarray
    kinds: tuple[str, ...]

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.intp)
        if idx.size != len(self.kinds):
            raise ValueError("indices and kinds differ in length")
        if idx.size and np.any(np.diff(idx) <= 0):
            raise ValueError("control point indices must be strictly increasing")
        object.__setattr__(self, "indices", idx)
        object.__setattr__(self, "kinds", tuple(self.kinds))

    def __len__(self):
        return self.indices.size

    def of_kind(self, kind: str) -> np.ndarray:
        return self.indices[np.array([k == kind for k in self.kinds], dtype=bool)]


@dataclass(frozen=True, eq=False)
class TonicEstimate:
    samples: np.ndarray
    fs: float
    control_points: ValleySet | None = None

    def __len__(self):
        return np.asarray(self.samples).size


def select_by_spacing(indices, scores, min_gap: float) -> np.ndarray:
    """Greedy suppression: strongest first, drop anything closer than `min_gap`.

    Ties in score go to the earlier index. Returns kept indices sorted.
    """
    indices = np.asarray(indices, dtype=np.intp)
    scores = np.asarray(scores, dtype=float)
    order = np.lexsort((indices, -scores))
    kept: list[int] = []
    for i in indices[order]:
        if all(abs(int(i) - k) >= min_gap for k in kept):
            kept.append(int(i))
    return np.array(sorted(kept), dtype=np.intp)


def valley_prominences(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Local minima of `x` and their prominences (depths on the negated trace)."""
    neg = -np.asarray(x, dtype=float)
    minima, _ = find_peaks(neg)
    if minima.size == 0:
        return minima, np.zeros(0)
    prom = peak_prominences(neg, minima)[0]
    return minima, prom


def detect_valleys(detrended: Signal, cfg: PipelineConfig | None = None) -> ValleySet:
    """Pick spline control points from a detrended working-rate signal.

    Valleys need prominence of at least ``cfg.valley_prominence`` and are
    thinned greedily to ``cfg.valley_min_distance``. Both segment ends are
    always control points, and every consecutive ``control_point_interval``
    tile without a detected valley contributes its minimum.
    """
    cfg = cfg or PipelineConfig()
    x = detrended.samples
    n = x.size
    if n < 2:
        raise ValueError("need at least two samples to place boundary control points")
    fs = detrended.fs

    minima, prom = valley_prominences(x)
    strong = prom >= cfg.valley_prominence
    # spacing compared in samples; tiny slack absorbs float rounding of d*fs
    detected = select_by_spacing(minima[strong], prom[strong],
                                 cfg.valley_min_distance * fs - 1e-9)

    kinds: dict[int, str] = {int(i): DETECTED for i in detected}
    kinds[0] = BOUNDARY
    kinds[n - 1] = BOUNDARY

    width = max(1, int(round(cfg.control_point_interval * fs)))
    for start in range(0, n, width):
        stop = min(start + width, n)
        if np.any((detected >= start) & (detected < stop)):
            continue
        fill = start + int(np.argmin(x[start:stop]))
        kinds.setdefault(fill, WINDOW_FILL)

    order = sorted(kinds)
    return ValleySet(np.array(order, dtype=np.intp), tuple(kinds[i] for i in order))


def spline_tonic(raw_working: Signal, valleys: ValleySet) -> TonicEstimate:
    """Natural cubic spline through the raw values at the control points."""
    y = raw_working.samples
    idx = valleys.indices
    if idx.size < 2:
        raise ValueError("need at least two control points")
    grid = np.arange(y.size, dtype=float)
    spline = CubicSpline(idx.astype(float), y[idx], bc_type="natural")
    values = spline(grid)
    # exact interpolation at the knots
    values[idx] = y[idx]
    return TonicEstimate(values, raw_working.fs, valleys)


def initial_tonic(raw_working: Signal, detrended: Signal, cfg: PipelineConfig | None = None) -> TonicEstimate:
    return spline_tonic(raw_working, detect_valleys(detrended, cfg))
