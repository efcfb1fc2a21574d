"""Spacing-ratio statistics for coupled generic/localized levels.

A one-parameter 3x3 matrix ensemble couples a localized level to a 2x2
Gaussian block.  This package samples it, evaluates the exact spacing-ratio
densities for both symmetry classes, cross-validates every closed form
against independent quadrature and Monte Carlo oracles, fits the coupling
to empirical ratio samples, and ingests externally computed level
sequences.
"""

__version__ = "0.1.0"

from ._kernels import BACKEND
from .analytic import (Beta2Coefficients, DensityGrid, DispatchThresholds,
                       MasterIntegralParams, beta2_coefficients,
                       joint_density_beta1, joint_density_beta2,
                       master_integral, pdf_beta1, pdf_beta1_k0, pdf_beta2,
                       pdf_beta2_k0, poisson_ratio_pdf, surmise_ratio_pdf)
from .ensemble import (Coupling, EigenTriple, RatioSample, SampleMeta,
                       SymmetryClass, eigensystem, glr_ratio, sample_matrix,
                       sample_ratios, shannon_entropy)
from .exceptions import (ConvergenceError, DomainError, LevelFileError,
                         NonIdentifiableError, RatioRmtError)
from .fitting import (FitResult, Histogram, build_histogram, fit_k_histogram,
                      fit_k_mle, ks_statistic, log_likelihood)
from .numerics import (QuadratureSpec, asinh, bessel_i0_scaled, integrate_1d,
                       integrate_real_line, integrate_semiinfinite)
from .oracle import (ComparisonReport, compare_densities,
                     pdf_via_joint_quadrature, pdf_via_monte_carlo)
from .spectra import (LevelSequence, TripleSelectionMode, extract_gl_ratios,
                      parse_level_file, tag_localized, write_level_file)

__all__ = [
    "BACKEND",
    "Beta2Coefficients",
    "ComparisonReport",
    "ConvergenceError",
    "Coupling",
    "DensityGrid",
    "DispatchThresholds",
    "DomainError",
    "EigenTriple",
    "FitResult",
    "Histogram",
    "LevelFileError",
    "LevelSequence",
    "MasterIntegralParams",
    "NonIdentifiableError",
    "QuadratureSpec",
    "RatioRmtError",
    "RatioSample",
    "SampleMeta",
    "SymmetryClass",
    "TripleSelectionMode",
    "asinh",
    "bessel_i0_scaled",
    "beta2_coefficients",
    "build_histogram",
    "compare_densities",
    "eigensystem",
    "extract_gl_ratios",
    "fit_k_histogram",
    "fit_k_mle",
    "glr_ratio",
    "integrate_1d",
    "integrate_real_line",
    "integrate_semiinfinite",
    "joint_density_beta1",
    "joint_density_beta2",
    "ks_statistic",
    "log_likelihood",
    "master_integral",
    "parse_level_file",
    "pdf_beta1",
    "pdf_beta1_k0",
    "pdf_beta2",
    "pdf_beta2_k0",
    "pdf_via_joint_quadrature",
    "pdf_via_monte_carlo",
    "poisson_ratio_pdf",
    "sample_matrix",
    "sample_ratios",
    "shannon_entropy",
    "surmise_ratio_pdf",
    "tag_localized",
    "write_level_file",
]
