"""Nonclassicality certification for lossy photon-added thermal states.

Library layout:

* fock: photon-number distributions, loss channel, Mandel Q, density matrices
* phasespace: Wigner and Husimi evaluation, convention checks
* certify: phase-space inequality certifiers, thresholds, region scans
* homodyne: quadrature densities, seeded sampling, dataset files
* tomography: maximum-likelihood reconstruction, model fits, bootstrap
* plots: figure rendering for the CLI report paths
* cli: command-line entry point
"""

from .certify import (
    DETECTION_K,
    CertificateReport,
    CertifierKind,
    ScanRow,
    ThresholdResult,
    TwoPointResult,
    certifier_value,
    critical_eta,
    make_report,
    optimal_single_point,
    optimize_two_point,
    parse_certifier,
    region_scan,
    single_point_value,
    two_point_value,
    wigner_min,
    write_scan_csv,
)
from .fock import (
    FockDensityMatrix,
    PhotonNumberDistribution,
    StateParams,
    apply_loss,
    coherent_matrix,
    diagonal_dist,
    loss_matrix,
    lossy_spats_dist,
    mandel_q,
    mean_photon,
    pgf_eval,
    photon_variance,
    spats_dist,
    thermal_dist,
)
from .homodyne import (
    ParseError,
    QuadratureDataset,
    quad_pdf,
    read_dataset,
    sample,
    write_dataset,
)
from .phasespace import (
    ALPHA_MAX,
    husimi_diag,
    husimi_eval,
    husimi_full,
    quadrature_marginal,
    wigner_diag,
    wigner_eval,
    wigner_full,
    wigner_norm_check,
)
from .tomography import (
    BinnedData,
    BootstrapResult,
    FitResult,
    MLEResult,
    bin_data,
    bootstrap,
    fit_eta,
    fit_params,
    mle_diagonal,
    mle_full,
    recommended_x_max,
)

__version__ = "0.1.0"

__all__ = [
    "ALPHA_MAX",
    "BinnedData",
    "BootstrapResult",
    "CertificateReport",
    "CertifierKind",
    "DETECTION_K",
    "FitResult",
    "FockDensityMatrix",
    "MLEResult",
    "ParseError",
    "PhotonNumberDistribution",
    "QuadratureDataset",
    "ScanRow",
    "StateParams",
    "ThresholdResult",
    "TwoPointResult",
    "apply_loss",
    "bin_data",
    "bootstrap",
    "certifier_value",
    "coherent_matrix",
    "critical_eta",
    "diagonal_dist",
    "fit_eta",
    "fit_params",
    "husimi_diag",
    "husimi_eval",
    "husimi_full",
    "loss_matrix",
    "lossy_spats_dist",
    "make_report",
    "mandel_q",
    "mean_photon",
    "mle_diagonal",
    "mle_full",
    "optimal_single_point",
    "optimize_two_point",
    "parse_certifier",
    "pgf_eval",
    "photon_variance",
    "quad_pdf",
    "quadrature_marginal",
    "read_dataset",
    "recommended_x_max",
    "region_scan",
    "sample",
    "single_point_value",
    "spats_dist",
    "thermal_dist",
    "two_point_value",
    "wigner_diag",
    "wigner_eval",
    "wigner_full",
    "wigner_min",
    "wigner_norm_check",
    "write_dataset",
    "write_scan_csv",
]
