"""Radar detection toolkit: clutter scenarios, classical detectors, and the
rectified-flow detector, backed by the C++ core."""

from ._rfmdet import (
    FlowModel,
    NonPositiveDefiniteError,
    NotConvergedError,
    Scenario,
    amf_scm,
    anmf_fp,
    anmf_scm,
    calibrate_threshold,
    cholesky,
    embed_real,
    marcum_q1,
    mf_pd_analytic,
    mf_statistic,
    mf_threshold_analytic,
    nmf_statistic,
    nmf_threshold_analytic,
    scm,
    sesquilinear,
    solve_hermitian,
    steering_vector,
    toeplitz_covariance,
    tyler_fp,
    unembed_real,
)

__all__ = [
    "FlowModel",
    "NonPositiveDefiniteError",
    "NotConvergedError",
    "Scenario",
    "amf_scm",
    "anmf_fp",
    "anmf_scm",
    "calibrate_threshold",
    "cholesky",
    "embed_real",
    "marcum_q1",
    "mf_pd_analytic",
    "mf_statistic",
    "mf_threshold_analytic",
    "nmf_statistic",
    "nmf_threshold_analytic",
    "scm",
    "sesquilinear",
    "solve_hermitian",
    "steering_vector",
    "toeplitz_covariance",
    "tyler_fp",
    "unembed_real",
]
