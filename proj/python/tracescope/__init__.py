"""Scalogram-based anomaly detection for step-like multivariate traces."""

from ._tracescope import (  # noqa: F401
    ChecksumError,
    Error,
    FormatError,
    InvalidArgument,
    IoError,
    Model,
    ShapeError,
    baseline_als,
    cwt,
    detect_peaks,
    expected_coupon_trials,
    render_scalogram,
    ricker,
    run_cli,
    scale_grid,
    step_trace,
)

__all__ = [
    "ChecksumError",
    "Error",
    "FormatError",
    "InvalidArgument",
    "IoError",
    "Model",
    "ShapeError",
    "baseline_als",
    "cwt",
    "detect_peaks",
    "expected_coupon_trials",
    "render_scalogram",
    "ricker",
    "run_cli",
    "scale_grid",
    "step_trace",
]
