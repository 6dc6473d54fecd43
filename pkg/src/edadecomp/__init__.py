"""Electrodermal activity decomposition.

Tonic/phasic separation by projecting the signal onto lagged copies of a
spline baseline, followed by sparse driver recovery with ridge-regularized
non-negative deconvolution. Includes a ground-truth simulator and the
scoring used to validate the method.
"""
__version__ = "0.1.0"

from .deconv import (DriverEstimate, DriverEvent, Kernel, biexp_kernel, nnls_ridge,
                     reconstruct, sparsify_driver)
from .errors import DataError, EDAError, NumericalError
from .kernels import BACKEND
from .metrics import (EvalReport, driver_detection_metrics, reconstruction_metrics,
                      window_driver_feature)
from .osp import LagSystem, OspResult, build_lag_system, mdl_order_select, osp_decompose, project
from .pipeline import Decomposition, decompose
from .preprocess import PipelineConfig, Signal, detrend_quadratic, lowpass_downsample
from .simulator import GroundTruth, SimConfig, add_awgn, sample_events, synthesize
from .tonic_init import TonicEstimate, ValleySet, detect_valleys, spline_tonic

__all__ = [
    "BACKEND", "DataError", "Decomposition", "DriverEstimate", "DriverEvent", "EDAError",
    "EvalReport", "GroundTruth", "Kernel", "LagSystem", "NumericalError", "OspResult",
    "PipelineConfig", "Signal", "SimConfig", "TonicEstimate", "ValleySet", "add_awgn",
    "biexp_kernel", "build_lag_system", "decompose", "detect_valleys", "detrend_quadratic",
    "driver_detection_metrics", "lowpass_downsample", "mdl_order_select", "nnls_ridge",
    "osp_decompose", "project", "reconstruct", "reconstruction_metrics", "sample_events",
    "sparsify_driver", "spline_tonic", "synthesize", "window_driver_feature",
]
