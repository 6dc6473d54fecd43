"""Reconstruction and event-detection scores against simulated ground truth."""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np


@dataclass
class EvalReport:
    rmse_tonic: float = float("nan")
    rmse_phasic: float = float("nan")
    corr_phasic: float = float("nan")
    r2: float = float("nan")
    corr_undefined: bool = False
    f1: float = float("nan")
    precision: float = float("nan")
    recall: float = float("nan")
    n_tp: int = 0
    n_fp: int = 0
    n_fn: int = 0

    def to_dict(self) -> dict:
        return asdict(self)

    def merge(self, other: "EvalReport") -> "EvalReport":
        out = EvalReport(**self.to_dict())
        for key, value in other.to_dict().items():
            if not (isinstance(value, float) and np.isnan(value)):
                setattr(out, key, value)
        return out


def rmse(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"shape mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.mean((a - b) ** 2)))


def pearson(a, b) -> tuple[float, bool]:
    """Pearson correlation; returns ``(0.0, True)`` if either input is constant."""
    a = np.asarray(a, dtype=float) - np.mean(a)
    b = np.asarray(b, dtype=float) - np.mean(b)
    denom = np.sqrt((a @ a) * (b @ b))
    if denom == 0:
        return 0.0, True
    return float(np.clip((a @ b) / denom, -1.0, 1.0)), False


def r_squared(estimate, reference) -> float:
    estimate = np.asarray(estimate, dtype=float)
    reference = np.asarray(reference, dtype=float)
    ss_res = float(np.sum((reference - estimate) ** 2))
    ss_tot = float(np.sum((reference - reference.mean()) ** 2))
    if ss_tot == 0:
        return 1.0 if ss_res == 0 else -np.inf
    return 1.0 - ss_res / ss_tot


def reconstruction_metrics(est_tonic, est_phasic, truth) -> EvalReport:
    """Component RMSEs, phasic correlation and R^2 of tonic + phasic
    against the clean composite."""
    est_tonic = np.asarray(est_tonic, dtype=float)
    est_phasic = np.asarray(est_phasic, dtype=float)
    corr, undefined = pearson(est_phasic, truth.phasic)
    return EvalReport(
        rmse_tonic=rmse(est_tonic, truth.tonic),
        rmse_phasic=rmse(est_phasic, truth.phasic),
        corr_phasic=corr,
        r2=r_squared(est_tonic + est_phasic, truth.clean_composite),
        corr_undefined=undefined,
    )


def _times(events) -> np.ndarray:
    return np.array([e[0] if not np.isscalar(e) else e for e in events], dtype=float)


def match_events(est_times, true_times, tolerance_s: float = 1.0) -> list[tuple[int, int]]:
    """Greedy one-to-one matching, closest pairs first.

    Ties in distance go to the earlier estimate, then the earlier truth.
    """
    est = np.asarray(est_times, dtype=float)
    true = np.asarray(true_times, dtype=float)
    if est.size == 0 or true.size == 0:
        return []
    dist = np.abs(est[:, None] - true[None, :])
    ei, ti = np.nonzero(dist <= tolerance_s + 1e-9)
    order = np.lexsort((ti, ei, dist[ei, ti]))
    used_e: set[int] = set()
    used_t: set[int] = set()
    pairs = []
    for k in order:
        e, t = int(ei[k]), int(ti[k])
        if e in used_e or t in used_t:
            continue
        used_e.add(e)
        used_t.add(t)
        pairs.append((e, t))
    return sorted(pairs)


def detection_scores(n_tp: int, n_est: int, n_true: int) -> tuple[float, float, float]:
    precision = n_tp / n_est if n_est else 0.0
    recall = n_tp / n_true if n_true else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def driver_detection_metrics(est_events, true_events, tolerance_s: float = 1.0) -> EvalReport:
    """Precision, recall and F1 of estimated driver events, timing only."""
    est = _times(est_events)
    true = _times(true_events)
    n_tp = len(match_events(est, true, tolerance_s))
    precision, recall, f1 = detection_scores(n_tp, est.size, true.size)
    return EvalReport(f1=f1, precision=precision, recall=recall,
                      n_tp=n_tp, n_fp=est.size - n_tp, n_fn=true.size - n_tp)


def window_driver_feature(events, window_start_s: float, window_len_s: float = 10.0) -> float:
    """Largest event amplitude in ``[start, start + len)``; 0 when empty."""
    if window_len_s <= 0:
        raise ValueError("window length must be positive")
    stop = window_start_s + window_len_s
    amps = [a for t, a in events if window_start_s <= t < stop]
    return float(max(amps)) if amps else 0.0


def evaluate(decomp, truth, tolerance_s: float = 1.0) -> EvalReport:
    """Score a pipeline :class:`~edadecomp.pipeline.Decomposition`."""
    rec = reconstruction_metrics(decomp.tonic, decomp.phasic_recon, truth)
    det = driver_detection_metrics(decomp.events, truth.events, tolerance_s)
    return rec.merge(det)


SUMMARY_FIELDS = ("rmse_tonic", "rmse_phasic", "corr_phasic", "r2", "f1", "precision", "recall")


def summarize(reports: list[EvalReport]) -> dict[str, tuple[float, float]]:
    """Mean and sample standard deviation of each summary field."""
    out = {}
    for name in SUMMARY_FIELDS:
        vals = np.array([getattr(r, name) for r in reports], dtype=float)
        sd = float(np.std(vals, ddof=1)) if vals.size > 1 else 0.0
        out[name] = (float(np.mean(vals)), sd)
    return out
