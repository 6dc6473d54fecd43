"""Tonic re-estimation by projection onto lagged copies of the initial tonic.

For each candidate order ``m`` the signal (minus its first ``m`` samples)
is projected onto the span of ``m + 1`` delayed copies of the spline
tonic. The order is chosen by minimum description length and the
projection at that order becomes the tonic component.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from .errors import DataError, NumericalError
from .preprocess import PipelineConfig, Signal
from .tonic_init import TonicEstimate

# residual variance below this fraction of the signal power counts as a perfect fit
_PERFECT_FIT = (64 * np.finfo(float).eps) ** 2


def _values(x) -> np.ndarray:
    if isinstance(x, (Signal, TonicEstimate)):
        x = x.samples
    return np.asarray(x, dtype=float)


@dataclass(frozen=True, eq=False)
class LagSystem:
    m: int
    V: np.ndarray
    Y_trunc: np.ndarray


@dataclass(frozen=True, eq=False)
class OspResult:
    m_star: int
    tonic: np.ndarray
    phasic: np.ndarray
    regularized: bool
    mdl_curve: np.ndarray

    @property
    def orders(self) -> np.ndarray:
        return np.arange(1, self.mdl_curve.size + 1)


def build_lag_system(x_hat, y, m: int) -> LagSystem:
    """Lag matrix of `x_hat` at order `m` and the matching tail of `y`.

    Column ``j`` of ``V`` holds ``x_hat[j : N - m + j]``.
    """
    x = _values(x_hat)
    yy = _values(y)
    n = x.size
    if yy.size != n:
        raise DataError(f"length mismatch: tonic estimate {n}, signal {yy.size}")
    if m < 1:
        raise DataError(f"model order must be at least 1, got {m}")
    if n - m < m + 2:
        raise DataError(f"insufficient samples for order {m}: N = {n}")
    V = np.ascontiguousarray(sliding_window_view(x, m + 1)[: n - m])
    return LagSystem(m, V, yy[m:].copy())


def gram_rcond(G: np.ndarray) -> float:
    """Reciprocal 1-norm condition number of a small square matrix."""
    norm = np.linalg.norm(G, 1)
    if norm == 0:
        return 0.0
    try:
        inv = np.linalg.inv(G)
    except LinAlgError:
        return 0.0
    inv_norm = np.linalg.norm(inv, 1)
    if not np.isfinite(inv_norm) or inv_norm == 0:
        return 0.0
    return float(1.0 / (norm * inv_norm))


def project(sys: LagSystem, lam: float = 0.01, rcond_floor: float = 1e-8) -> tuple[np.ndarray, bool]:
    """Project ``sys.Y_trunc`` onto the column space of ``sys.V``.

    Falls back to the ridge-regularized projector when the Gram matrix
    is ill-conditioned. Only the small normal system is solved.

    Returns
    -------
    y_hat : numpy.ndarray
        Projected signal, same length as ``sys.Y_trunc``.
    regularized : bool
        True when the ridge branch was used.
    """
    V = sys.V
    if not np.any(V):
        raise NumericalError("degenerate subspace: lag matrix is all zero")
    G = V.T @ V
    regularized = gram_rcond(G) < rcond_floor
    if regularized:
        G = G + lam * np.eye(G.shape[0])
    try:
        factor = cho_factor(G, lower=True, check_finite=False)
    except LinAlgError as exc:
        raise NumericalError("degenerate subspace: Gram matrix is singular") from exc
    coef = cho_solve(factor, V.T @ sys.Y_trunc, check_finite=False)
    if not np.all(np.isfinite(coef)):
        raise NumericalError("degenerate subspace: non-finite projection coefficients")
    return V @ coef, regularized


def candidate_orders(cfg: PipelineConfig) -> np.ndarray:
    top = max(1, int(round(cfg.working_fs * cfg.max_lag_seconds)))
    return np.arange(1, top + 1)


def _order_fit(x, y, m, cfg):
    sys = build_lag_system(x, y, m)
    y_hat, regularized = project(sys, cfg.ridge_lambda, cfg.rcond_floor)
    return sys, y_hat, regularized


def mdl_score(residual: np.ndarray, n: int, m: int, power: float) -> float:
    """MDL of one order; the residual variance divides by the full length `n`."""
    sigma2 = float(residual @ residual) / n
    if sigma2 <= _PERFECT_FIT * power:
        return -np.inf
    return n * np.log(sigma2) + (m + 1) * np.log(n - m)


def mdl_order_select(x_hat, y, cfg: PipelineConfig | None = None) -> tuple[int, np.ndarray]:
    """Choose the lag order minimizing the description length.

    Returns the selected order and the MDL value of every candidate order
    (entry ``k`` belongs to order ``k + 1``). Ties go to the smaller order;
    a perfect fit scores ``-inf``.
    """
    cfg = cfg or PipelineConfig()
    x = _values(x_hat)
    yy = _values(y)
    n = yy.size
    power = float(yy @ yy) / max(n, 1)
    orders = candidate_orders(cfg)
    curve = np.empty(orders.size)
    for k, m in enumerate(orders):
        sys, y_hat, _ = _order_fit(x, yy, int(m), cfg)
        curve[k] = mdl_score(sys.Y_trunc - y_hat, n, int(m), power)
    return int(orders[int(np.argmin(curve))]), curve


def osp_decompose(y, x_hat, cfg: PipelineConfig | None = None) -> OspResult:
    """Split `y` into tonic and phasic parts.

    The first ``m_star`` tonic samples, which the lag system cannot
    reach, are taken from the spline estimate.
    """
    cfg = cfg or PipelineConfig()
    x = _values(x_hat)
    yy = _values(y)
    if x.size != yy.size:
        raise DataError(f"length mismatch: tonic estimate {x.size}, signal {yy.size}")
    m_star, curve = mdl_order_select(x, yy, cfg)
    _, y_hat, regularized = _order_fit(x, yy, m_star, cfg)
    tonic = np.empty_like(yy)
    tonic[:m_star] = x[:m_star]
    tonic[m_star:] = y_hat
    return OspResult(m_star, tonic, yy - tonic, regularized, curve)
