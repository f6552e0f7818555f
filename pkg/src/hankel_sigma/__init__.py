"""Sigma-function calculus for Hankel operators.

Modules: ``specfun`` (gamma, Laguerre, Meixner-Pollaczek), ``transforms``
(Mellin/Laplace factorization, inverse Laplace, sigma from kernel),
``sigma`` (distributional sigma-functions, sign-count predictions),
``spectral`` (finite sections, Jacobi eigensolver, Gram checks),
``discrete`` (Laguerre-basis matrix elements, moment problem) and ``cli``.
"""

from .discrete import (EtaFunction, MomentSequence, asymptotic_q, eta_from_sigma, kernel_from_q,
                       moment_solve, q_from_eta, q_from_kernel, quasi_carleman_q)
from .sigma import (DeltaDerivative, FinitePart, KernelSpec, KernelTerm, Regular, SigmaDistribution,
                    predicted_counts, quasi_carleman_sigma)
from .spectral import HankelSection, count_signs, eig_sym, verify_main_identity
from .transforms import LogGrid, TestFunction, bump_basis, inverse_laplace, laplace_via_mellin, sigma_from_kernel

__version__ = "0.1.0"

__all__ = [
    "DeltaDerivative", "EtaFunction", "FinitePart", "HankelSection", "KernelSpec", "KernelTerm",
    "LogGrid", "MomentSequence", "Regular", "SigmaDistribution", "TestFunction", "asymptotic_q",
    "bump_basis", "count_signs", "eig_sym", "eta_from_sigma", "inverse_laplace", "kernel_from_q",
    "laplace_via_mellin", "moment_solve", "predicted_counts", "q_from_eta", "q_from_kernel",
    "quasi_carleman_q", "quasi_carleman_sigma", "sigma_from_kernel", "verify_main_identity",
]
