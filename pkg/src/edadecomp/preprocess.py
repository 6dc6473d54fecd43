"""Signal container, pipeline configuration, anti-aliasing and detrending."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields, replace

import numpy as np
from scipy import signal as sps

from .errors import DataError

FILTER_ORDER = 8
FILTER_RIPPLE_DB = 0.1
FILTER_CUTOFF_HZ = 1.6
# minimum raw length accepted by the anti-aliasing stage
FILTER_WARMUP = 3 * FILTER_ORDER


@dataclass(frozen=True, eq=False)
class Signal:
    """Uniformly sampled skin conductance trace.

    Parameters
    ----------
    samples : array_like
        Conductance values in microsiemens.
    fs : float
        Sampling rate in Hz.
    t0 : float, optional
        Time of the first sample in seconds.
    """

    samples: np.ndarray
    fs: float
    t0: float = 0.0

    def __post_init__(self):
        x = np.asarray(self.samples, dtype=float)
        if x.ndim != 1:
            raise DataError("samples must be one-dimensional")
        if not np.all(np.isfinite(x)):
            raise DataError("samples contain NaN or Inf")
        if not (np.isfinite(self.fs) and self.fs > 0):
            raise DataError(f"sampling rate must be positive, got {self.fs}")
        x.setflags(write=False)
        object.__setattr__(self, "samples", x)
        object.__setattr__(self, "fs", float(self.fs))
        object.__setattr__(self, "t0", float(self.t0))

    def __len__(self):
        return self.samples.size

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.samples.size) / self.fs

    @property
    def duration(self) -> float:
        return self.samples.size / self.fs

    def with_samples(self, samples) -> "Signal":
        return Signal(samples, self.fs, self.t0)


@dataclass(frozen=True)
class PipelineConfig:
    """Heuristic parameters and solver constants of the decomposition.

    Durations are in seconds, amplitudes in microsiemens.
    """

    valley_prominence: float = 0.05
    valley_min_distance: float = 20.0
    control_point_interval: float = 20.0
    ridge_lambda: float = 0.01
    driver_amp_threshold: float = 0.01
    driver_min_distance: float = 5.0
    tau1: float = 0.7
    tau2: float = 2.0
    kernel_duration: float = 20.0
    working_fs: float = 4.0
    max_lag_seconds: float = 1.0
    rcond_floor: float = 1e-8
    nnls_tolerance: float = 1e-8
    nnls_max_iter: int = field(default=500)

    def __post_init__(self):
        if not self.tau2 > self.tau1 > 0:
            raise DataError("invalid time constants: need tau2 > tau1 > 0")
        positive = (
            "valley_prominence", "valley_min_distance", "control_point_interval",
            "driver_amp_threshold", "driver_min_distance", "kernel_duration",
            "working_fs", "max_lag_seconds", "rcond_floor", "nnls_tolerance",
        )
        for name in positive:
            value = getattr(self, name)
            if not (np.isfinite(value) and value > 0):
                raise DataError(f"{name} must be positive, got {value}")
        if not self.ridge_lambda >= 0:
            raise DataError(f"ridge_lambda must be non-negative, got {self.ridge_lambda}")
        if self.nnls_max_iter < 1:
            raise DataError("nnls_max_iter must be at least 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown pipeline parameters: {sorted(unknown)}")
        return cls(**data)

    def updated(self, **changes) -> "PipelineConfig":
        return replace(self, **{k: v for k, v in changes.items() if v is not None})


def antialias_sos(fs: float) -> np.ndarray:
    """Second-order sections of the 8th-order Chebyshev type I low-pass."""
    if FILTER_CUTOFF_HZ >= fs / 2:
        raise DataError(f"sampling rate {fs} Hz too low for a {FILTER_CUTOFF_HZ} Hz cutoff")
    return sps.cheby1(FILTER_ORDER, FILTER_RIPPLE_DB, FILTER_CUTOFF_HZ, btype="low",
                      output="sos", fs=fs)


def _causal_filter(x: np.ndarray, fs: float) -> np.ndarray:
    sos = antialias_sos(fs)
    # steady-state start at the first sample; zi is linear in x[0] so the
    # filter stays linear in its input
    zi = sps.sosfilt_zi(sos) * x[0]
    y, _ = sps.sosfilt(sos, x, zi=zi)
    return y


def lowpass_downsample(raw: Signal, cfg: PipelineConfig | None = None) -> Signal:
    """Anti-alias filter `raw` and bring it to the working rate.

    The filter is applied forward only. Integer rate ratios are decimated
    by plain subsampling; other ratios are linearly interpolated onto the
    working grid after filtering at the raw rate.
    """
    cfg = cfg or PipelineConfig()
    if raw.fs < cfg.working_fs:
        raise DataError(f"cannot upsample: input rate {raw.fs} Hz < working rate {cfg.working_fs} Hz")
    if len(raw) <= FILTER_WARMUP:
        raise DataError(f"signal too short: {len(raw)} samples, need more than {FILTER_WARMUP}")
    y = _causal_filter(raw.samples, raw.fs)
    ratio = raw.fs / cfg.working_fs
    q = round(ratio)
    if abs(ratio - q) < 1e-9:
        return Signal(y[::q], cfg.working_fs, raw.t0)
    n_out = int(np.floor((len(raw) - 1) / ratio)) + 1
    t_out = np.arange(n_out) / cfg.working_fs
    t_in = np.arange(len(raw)) / raw.fs
    return Signal(np.interp(t_out, t_in, y), cfg.working_fs, raw.t0)


def quadratic_trend(x: np.ndarray) -> np.ndarray:
    """Least-squares quadratic fit of `x` on a time axis scaled to [-1, 1]."""
    n = x.size
    if n < 3:
        raise DataError(f"degenerate fit: quadratic detrending needs at least 3 samples, got {n}")
    u = np.linspace(-1.0, 1.0, n)
    basis = np.vander(u, 3)
    coef, *_ = np.linalg.lstsq(basis, x, rcond=None)
    return basis @ coef


def detrend_quadratic(s: Signal) -> Signal:
    """Remove the least-squares quadratic trend from `s`."""
    return s.with_samples(s.samples - quadratic_trend(s.samples))
