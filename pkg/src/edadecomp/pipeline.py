"""End-to-end decomposition: preprocess, initial tonic, projection, deconvolution."""
from __future__ import annotations

from contextlib import contextmanager
from dataclasses import dataclass

import numpy as np

from .deconv import DriverEvent, deconvolve
from .errors import EDAError
from .osp import osp_decompose
from .preprocess import PipelineConfig, Signal, detrend_quadratic, lowpass_downsample
from .tonic_init import ValleySet, detect_valleys, spline_tonic


@dataclass(frozen=True, eq=False)
class Decomposition:
    """All pipeline outputs at the working rate.

    ``raw`` is the filtered working-rate signal the components add up to:
    ``raw == tonic + phasic_recon + noise``.
    """

    raw: np.ndarray
    fs: float
    t0: float
    tonic: np.ndarray
    phasic: np.ndarray
    phasic_recon: np.ndarray
    driver: np.ndarray
    noise: np.ndarray
    events: list[DriverEvent]
    m_star: int
    regularized: bool
    mdl_curve: np.ndarray
    spline_tonic: np.ndarray
    valleys: ValleySet

    @property
    def times(self) -> np.ndarray:
        return self.t0 + np.arange(self.raw.size) / self.fs


@contextmanager
def _stage(name: str):
    """Prefix pipeline errors with the stage that raised them."""
    try:
        yield
    except EDAError as exc:
        raise type(exc)(f"{name}: {exc}") from exc


def decompose(raw: Signal, cfg: PipelineConfig | None = None, backend=None) -> Decomposition:
    cfg = cfg or PipelineConfig()
    with _stage("preprocess"):
        y = lowpass_downsample(raw, cfg)
        detrended = detrend_quadratic(y)
    with _stage("tonic_init"):
        valleys = detect_valleys(detrended, cfg)
        x_hat = spline_tonic(y, valleys)
    with _stage("osp_tonic"):
        osp = osp_decompose(y, x_hat, cfg)
    with _stage("driver_deconv"):
        drv = deconvolve(osp.phasic, osp.tonic, y.samples, cfg, backend)
    events = [DriverEvent(e.time + y.t0, e.amplitude) for e in drv.events]
    return Decomposition(
        raw=y.samples, fs=y.fs, t0=y.t0, tonic=osp.tonic, phasic=osp.phasic,
        phasic_recon=drv.phasic_recon, driver=drv.continuous, noise=drv.noise,
        events=events, m_star=osp.m_star, regularized=osp.regularized,
        mdl_curve=osp.mdl_curve, spline_tonic=x_hat.samples, valleys=valleys,
    )
