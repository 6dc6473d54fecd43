"""Synthetic skin conductance segments with known components.

A segment is a sparse impulse train convolved with a bi-exponential
response (phasic), a drifting offset plus a slow sinusoid (tonic), and
white Gaussian noise at a set of signal-to-noise ratios.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields

import numpy as np

from .deconv import DriverEvent, biexp_taps, convolve
from .errors import DataError

SNR_REFERENCES = ("mean_square", "variance")


@dataclass(frozen=True)
class SimConfig:
    duration: float = 300.0
    fs: float = 4.0
    n_events: int = 30
    min_event_gap: float = 2.0
    amp_range: tuple[float, float] = (0.01, 1.00)
    tau1: float = 0.7
    tau2_range: tuple[float, float] = (2.0, 4.0)
    irf_duration: float = 20.0
    offset_range: tuple[float, float] = (3.0, 6.0)
    slope_range: tuple[float, float] = (-2.0, 2.0)
    sine_amp_range: tuple[float, float] = (0.1, 0.5)
    sine_period_range: tuple[float, float] = (60.0, 120.0)
    tonic_floor: float = 0.5
    snr_levels: tuple[float, ...] = (30.0, 20.0, 10.0)
    snr_reference: str = "variance"
    seed: int = 0

    def __post_init__(self):
        for name in ("amp_range", "tau2_range", "offset_range", "slope_range",
                     "sine_amp_range", "sine_period_range"):
            lo, hi = getattr(self, name)
            if not lo <= hi:
                raise DataError(f"{name} must be ordered, got ({lo}, {hi})")
            object.__setattr__(self, name, (float(lo), float(hi)))
        object.__setattr__(self, "snr_levels", tuple(float(s) for s in self.snr_levels))
        if self.duration <= 0 or self.fs <= 0:
            raise DataError("duration and fs must be positive")
        if self.n_events < 0:
            raise DataError("n_events must be non-negative")
        if not self.tau2_range[0] > self.tau1 > 0:
            raise DataError("invalid time constants: need tau2 > tau1 > 0")
        if self.snr_reference not in SNR_REFERENCES:
            raise DataError(f"snr_reference must be one of {SNR_REFERENCES}")

    @property
    def n_samples(self) -> int:
        return int(round(self.duration * self.fs))

    def to_dict(self) -> dict:
        d = asdict(self)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown simulation parameters: {sorted(unknown)}")
        return cls(**{k: tuple(v) if isinstance(v, list) else v for k, v in data.items()})


def snr_label(snr_db: float) -> str:
    return "clean" if np.isinf(snr_db) else f"snr{snr_db:g}"


@dataclass(frozen=True, eq=False)
class GroundTruth:
    tonic: np.ndarray
    phasic: np.ndarray
    clean_composite: np.ndarray
    driver: np.ndarray
    events: list[DriverEvent]
    noisy: dict[str, np.ndarray]
    fs: float
    seed: int | None = None
    tau2: float | None = None

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.tonic.size) / self.fs

    def signal(self, label: str) -> np.ndarray:
        return self.clean_composite if label == "clean" else self.noisy[label]


def sample_event_indices(n_samples: int, n_events: int, gap: int, rng) -> np.ndarray:
    """Uniformly random sorted sample indices with pairwise spacing >= `gap`.

    Drawing ``n_events`` distinct slots from a shortened grid and
    re-inserting the mandatory spacing gives every feasible placement the
    same probability, so no rejection loop is needed.
    """
    if n_events == 0:
        return np.zeros(0, dtype=np.intp)
    slots = n_samples - (n_events - 1) * (gap - 1)
    if slots < n_events:
        raise DataError(
            f"infeasible packing: {n_events} events with {gap}-sample spacing in {n_samples} samples")
    picks = np.sort(rng.choice(slots, size=n_events, replace=False))
    return picks + np.arange(n_events) * (gap - 1)


def sample_events(cfg: SimConfig, rng) -> list[DriverEvent]:
    """Event times on the sample grid with uniform amplitudes."""
    if cfg.n_events > 1 and cfg.n_events * cfg.min_event_gap >= cfg.duration:
        raise DataError(
            f"infeasible packing: {cfg.n_events} events x {cfg.min_event_gap} s >= {cfg.duration} s")
    gap = max(1, int(np.ceil(cfg.min_event_gap * cfg.fs - 1e-9)))
    idx = sample_event_indices(cfg.n_samples, cfg.n_events, gap, rng)
    amps = rng.uniform(*cfg.amp_range, size=idx.size)
    return [DriverEvent(i / cfg.fs, float(a)) for i, a in zip(idx, amps)]


def tonic_curve(t, duration, offset, slope, amp, period, phase):
    return offset + slope * (t / duration) + amp * np.sin(2 * np.pi * t / period + phase)


def sample_tonic(cfg: SimConfig, rng, max_attempts: int = 1000) -> tuple[np.ndarray, dict]:
    t = np.arange(cfg.n_samples) / cfg.fs
    for _ in range(max_attempts):
        params = dict(
            offset=rng.uniform(*cfg.offset_range),
            slope=rng.uniform(*cfg.slope_range),
            amp=rng.uniform(*cfg.sine_amp_range),
            period=rng.uniform(*cfg.sine_period_range),
            phase=rng.uniform(0.0, 2 * np.pi),
        )
        tonic = tonic_curve(t, cfg.duration, **params)
        if tonic.min() >= cfg.tonic_floor:
            return tonic, params
    raise DataError(f"tonic stayed below {cfg.tonic_floor} uS after {max_attempts} draws")


def noise_power(clean, snr_db: float, reference: str = "variance") -> float:
    clean = np.asarray(clean, dtype=float)
    if reference == "mean_square":
        power = float(np.mean(clean ** 2))
    elif reference == "variance":
        power = float(np.var(clean))
    else:
        raise DataError(f"unknown SNR reference {reference!r}")
    return power / 10 ** (snr_db / 10)


def add_awgn(clean, snr_db: float, rng, reference: str = "variance") -> np.ndarray:
    """Add white Gaussian noise at `snr_db` relative to the clean signal power."""
    clean = np.asarray(clean, dtype=float)
    if clean.size == 0:
        raise DataError("cannot add noise to an empty signal")
    if np.isposinf(snr_db):
        return clean.copy()
    sigma = np.sqrt(noise_power(clean, snr_db, reference))
    return clean + rng.normal(0.0, sigma, size=clean.size)


def synthesize(cfg: SimConfig | None = None, rng=None) -> GroundTruth:
    """Generate one segment. `rng` defaults to a generator seeded by ``cfg.seed``."""
    cfg = cfg or SimConfig()
    if rng is None:
        rng = np.random.default_rng(cfg.seed)
    n = cfg.n_samples
    events = sample_events(cfg, rng)
    driver = np.zeros(n)
    for ev in events:
        driver[int(round(ev.time * cfg.fs))] += ev.amplitude
    tau2 = float(rng.uniform(*cfg.tau2_range))
    irf = biexp_taps(cfg.tau1, tau2, cfg.fs, cfg.irf_duration)
    phasic = convolve(driver, irf)
    tonic, _ = sample_tonic(cfg, rng)
    clean = tonic + phasic
    noisy = {snr_label(s): add_awgn(clean, s, rng, cfg.snr_reference) for s in cfg.snr_levels}
    return GroundTruth(tonic, phasic, clean, driver, events, noisy, cfg.fs, cfg.seed, tau2)


def segment_seeds(seed: int, n: int) -> list[int]:
    """Independent per-segment seeds derived from one master seed."""
    return [int(s) for s in np.random.SeedSequence(seed).generate_state(n, dtype=np.uint32)]
