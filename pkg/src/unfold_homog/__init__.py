"""Numerical periodic homogenization with Orlicz growth.

The package computes effective energy densities of periodically
oscillating, possibly non-convex integrands by solving cell problems on
dilated unit cells, and verifies at desk scale the integral identities of
the periodic unfolding operator that the homogenization formula rests on.

Layout:

``young``     Young functions, complementary (conjugate) functions,
              doubling certificates, modulars and Luxemburg norms.
``field``     Regular-grid fields on boxes, gradients, quadrature.
``unfold``    The discrete unfolding operator, cell decompositions,
              integral identities and two-scale pairings.
``integrand`` Periodic energy densities f(y, xi) with growth checks and
              the scalar convex-envelope oracle.
``cell``      Cell problems: f_t(xi) by multistart quasi-Newton descent,
              effective-density estimation along dilation ladders.
``harness``   End-to-end verification experiments.
``cli``       Command-line driver (``unfold-homog``).
"""

__version__ = "0.1.0"

from .errors import (
    AlignmentError,
    CertificateError,
    ConfigError,
    DataError,
    DomainError,
    ExtrapolationError,
    GrowthRejectionError,
    SolverError,
    UnfoldHomogError,
)
from .young import (
    GrowthCertificate,
    YoungFunction,
    complementary,
    delta2_certificate,
    eval_B,
    exp_minus_linear,
    luxemburg_norm,
    modular,
    nabla2_certificate,
    power,
    power_log,
)
from .field import Box, Grid, GridField, gradient, integrate, sample, sample_cells
from .unfold import (
    EpsilonDecomposition,
    UnfoldedField,
    decompose,
    limit_pairing,
    mean_value,
    modular_identity_report,
    strong_convergence_report,
    two_scale_pairing,
    uci_defect,
    unfold,
)
from .integrand import (
    Envelope1D,
    IntegrandSpec,
    PotentialSpec,
    coefficient_constant,
    coefficient_piecewise,
    coefficient_trig,
    convex_envelope_1d,
    evaluate,
    grad_xi,
    growth_check,
    relax_potential,
)
from .cell import (
    CellProblem,
    CellSolution,
    HomTable,
    SolverConfig,
    cell_energy,
    estimate_f_hom,
    hom_table,
    solve_cell,
)
from .harness import (
    SweepReport,
    dirichlet_minimize,
    eps_sweep_affine,
    manufactured_unfolding_check,
    relaxation_equivalence_check,
)
