"""Sparse driver recovery by ridge-regularized non-negative deconvolution."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError
from scipy.signal import find_peaks

from .errors import DataError, NumericalError
from .kernels import get_backend
from .preprocess import PipelineConfig
from .tonic_init import select_by_spacing


class DriverEvent(NamedTuple):
    time: float
    amplitude: float


@dataclass(frozen=True, eq=False)
class Kernel:
    taps: np.ndarray
    tau1: float
    tau2: float
    fs: float

    def __len__(self):
        return self.taps.size


@dataclass(frozen=True, eq=False)
class DriverEstimate:
    continuous: np.ndarray
    events: list[DriverEvent]
    phasic_recon: np.ndarray
    noise: np.ndarray


@dataclass(frozen=True, eq=False)
class NNLSResult:
    x: np.ndarray
    iterations: int
    objective: float
    kkt_violation: float


def biexp_taps(tau1: float, tau2: float, fs: float, duration: float) -> np.ndarray:
    """Unnormalized bi-exponential response sampled at ``k / fs``, k = 0..K.

    `tau1` is the fast (rise) and `tau2` the slow (decay) constant; the
    difference is taken slow minus fast so the response is non-negative.
    """
    if not tau2 > tau1 > 0:
        raise DataError(f"invalid time constants: tau1={tau1}, tau2={tau2}")
    t = np.arange(int(round(duration * fs)) + 1) / fs
    return np.exp(-t / tau2) - np.exp(-t / tau1)


def biexp_kernel(cfg: PipelineConfig | None = None) -> Kernel:
    """Sum-normalized deconvolution kernel at the working rate."""
    cfg = cfg or PipelineConfig()
    taps = biexp_taps(cfg.tau1, cfg.tau2, cfg.working_fs, cfg.kernel_duration)
    taps = taps / taps.sum()
    taps.setflags(write=False)
    return Kernel(taps, cfg.tau1, cfg.tau2, cfg.working_fs)


def _taps(kernel) -> np.ndarray:
    return np.asarray(kernel.taps if isinstance(kernel, Kernel) else kernel, dtype=float)


def convolve(p, taps) -> np.ndarray:
    """Causal convolution truncated to the input length (``H @ p``)."""
    p = np.asarray(p, dtype=float)
    return np.convolve(p, taps)[: p.size]


def convolve_adjoint(r, taps) -> np.ndarray:
    """Transpose of :func:`convolve` (``H.T @ r``)."""
    r = np.asarray(r, dtype=float)
    return np.convolve(r[::-1], taps)[: r.size][::-1]


def convolution_matrix(taps, n: int) -> np.ndarray:
    """Dense lower-triangular Toeplitz matrix; for tests and small problems."""
    taps = np.asarray(taps, dtype=float)
    H = np.zeros((n, n))
    for k, h in enumerate(taps[:n]):
        H += np.diag(np.full(n - k, h), -k)
    return H


def ridge_gram_band(taps, n: int, lam: float) -> np.ndarray:
    """Band of ``H.T @ H + lam * I`` for the causal convolution ``H``.

    Row ``d`` holds the ``d``-th superdiagonal. Row sums near the end of
    the segment are truncated because ``H`` has only ``n`` rows.
    """
    taps = np.asarray(taps, dtype=float)
    width = min(taps.size, n) - 1
    band = np.zeros((width + 1, n))
    cols = np.arange(n)
    for d in range(width + 1):
        cum = np.cumsum(taps[: taps.size - d] * taps[d:])
        j = cols[: n - d] + d
        last = np.minimum(cum.size - 1, n - 1 - j)
        band[d, : n - d] = cum[last]
    band[0] += lam
    return band


def solve_banded_nnls(gband, b, tol: float = 1e-8, max_iter: int = 500, backend=None) -> tuple[np.ndarray, int]:
    """Minimize ``0.5 x'Gx - b'x`` over ``x >= 0`` for banded SPD ``G``.

    Block principal pivoting: all infeasible variables are exchanged
    between the free and bound sets at once, falling back to exchanging
    only the largest offending index when the infeasible count stops
    decreasing (Kim & Park's safeguard). `tol` bounds the negative part
    of the bound-set gradient ``2 (Gx - b)``.
    """
    kern = get_backend(backend) if not hasattr(backend, "band_subsolve") else backend
    gband = np.ascontiguousarray(gband, dtype=float)
    b = np.ascontiguousarray(b, dtype=float)
    n = b.size
    free = np.zeros(n, dtype=bool)
    x = np.zeros(n)
    grad = -b
    best_count = n + 1
    budget = 3
    for it in range(1, max_iter + 1):
        bad = (free & (x < 0)) | (~free & (2.0 * grad < -tol))
        count = int(bad.sum())
        if count == 0:
            return x, it - 1
        if count < best_count:
            best_count = count
            budget = 3
            flip = bad
        elif budget > 0:
            budget -= 1
            flip = bad
        else:
            flip = np.zeros(n, dtype=bool)
            flip[np.flatnonzero(bad)[-1]] = True
        free ^= flip
        idx = np.flatnonzero(free)
        x = np.zeros(n)
        try:
            x[idx] = kern.band_subsolve(gband, idx, b[idx])
        except LinAlgError as exc:
            raise NumericalError("NNLS subproblem is singular") from exc
        grad = kern.band_matvec(gband, x) - b
        grad[idx] = 0.0
    raise NumericalError(f"NNLS did not converge in {max_iter} iterations")


def ridge_objective(p, phasic, kernel, lam: float) -> float:
    r = convolve(p, _taps(kernel)) - np.asarray(phasic, dtype=float)
    p = np.asarray(p, dtype=float)
    return float(r @ r + lam * (p @ p))


def ridge_gradient(p, phasic, kernel, lam: float) -> np.ndarray:
    """Gradient of the ridge objective, i.e. ``Q p + f`` of the quadratic program."""
    taps = _taps(kernel)
    p = np.asarray(p, dtype=float)
    r = convolve(p, taps) - np.asarray(phasic, dtype=float)
    return 2.0 * (convolve_adjoint(r, taps) + lam * p)


def kkt_violation(p, grad) -> float:
    """Largest KKT residual: |grad| on positive coordinates, negative part elsewhere."""
    p = np.asarray(p)
    grad = np.asarray(grad)
    act = p > 0
    worst = 0.0
    if act.any():
        worst = float(np.max(np.abs(grad[act])))
    if (~act).any():
        worst = max(worst, float(np.max(-grad[~act], initial=0.0)))
    if np.any(p < 0):
        worst = max(worst, float(-p.min()))
    return worst


def nnls_ridge_solve(phasic, kernel, lam: float = 0.01, tol: float = 1e-8,
                     max_iter: int = 500, backend=None) -> NNLSResult:
    y = np.asarray(phasic, dtype=float)
    if y.ndim != 1 or y.size == 0:
        raise DataError("phasic input must be a non-empty 1-D sequence")
    if not np.all(np.isfinite(y)):
        raise DataError("phasic input contains NaN or Inf")
    if not lam >= 0:
        raise DataError(f"ridge parameter must be non-negative, got {lam}")
    taps = _taps(kernel)
    if not np.all(np.isfinite(taps)) or np.any(taps < 0):
        raise DataError("kernel taps must be finite and non-negative")
    gband = ridge_gram_band(taps, y.size, lam)
    b = convolve_adjoint(y, taps)
    x, iters = solve_banded_nnls(gband, b, tol, max_iter, backend)
    grad = ridge_gradient(x, y, taps, lam)
    return NNLSResult(x, iters, ridge_objective(x, y, taps, lam), kkt_violation(x, grad))


def nnls_ridge(phasic, kernel, lam: float = 0.01, tol: float = 1e-8,
               max_iter: int = 500, backend=None) -> np.ndarray:
    """Non-negative driver minimizing ``||H p - phasic||^2 + lam ||p||^2``."""
    return nnls_ridge_solve(phasic, kernel, lam, tol, max_iter, backend).x


def sparsify_driver(p, cfg: PipelineConfig | None = None, fs: float | None = None,
                    t0: float = 0.0) -> list[DriverEvent]:
    """Local driver maxima above the amplitude threshold, thinned to the
    minimum distance by keeping the largest peak. Sorted by time."""
    cfg = cfg or PipelineConfig()
    fs = cfg.working_fs if fs is None else fs
    p = np.asarray(p, dtype=float)
    if p.size < 3:
        return []
    peaks, _ = find_peaks(p, height=cfg.driver_amp_threshold)
    if peaks.size == 0:
        return []
    kept = select_by_spacing(peaks, p[peaks], cfg.driver_min_distance * fs - 1e-9)
    return [DriverEvent(t0 + i / fs, float(p[i])) for i in kept]


def reconstruct(p, kernel, tonic, raw) -> tuple[np.ndarray, np.ndarray]:
    """Phasic reconstruction from the driver and the leftover noise term."""
    p = np.asarray(p, dtype=float)
    tonic = np.asarray(tonic, dtype=float)
    raw = np.asarray(raw, dtype=float)
    if not (p.size == tonic.size == raw.size):
        raise DataError(f"length mismatch: driver {p.size}, tonic {tonic.size}, raw {raw.size}")
    phasic_recon = convolve(p, _taps(kernel))
    return phasic_recon, raw - tonic - phasic_recon


def deconvolve(phasic, tonic, raw, cfg: PipelineConfig | None = None, backend=None) -> DriverEstimate:
    cfg = cfg or PipelineConfig()
    kernel = biexp_kernel(cfg)
    p = nnls_ridge(phasic, kernel, cfg.ridge_lambda, cfg.nnls_tolerance, cfg.nnls_max_iter, backend)
    events = sparsify_driver(p, cfg)
    recon, noise = reconstruct(p, kernel, tonic, raw)
    return DriverEstimate(p, events, recon, noise)
