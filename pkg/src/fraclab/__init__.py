"""Numerical lab for Dirichlet eigenvalues of the fractional Laplacian."""

from .errors import (AmplitudeExhausted, BudgetExceeded, CholeskyFailure, ConfigError, FitUnstable,
                     FraclabError, GridTooCoarse, IndefiniteForm, InvalidOrder, MaxIterations,
                     NoSplittingCandidate, NonPositiveWeight, NotStarShaped, TooLarge, TooManyNodes,
                     TrackingAmbiguous)
from .kernel import frac_constant, trace_constant
from .geometry import (AffineField, BoundaryQuadrature, CompositeMap, FourierField1D, Interval,
                       NormalFourierField, StarDomain, SumField, apply_perturbation, compose_maps,
                       dilation, disk, domain_from_config, field_from_config, normal_mode,
                       translation, zero_field)
from .discretization import (DiscreteOperator, assemble_1d_grid, assemble_1d_spectral,
                             assemble_2d_grid, assemble_derivative_kernel, assemble_mass_derivative,
                             assemble_potential, assemble_transformed_form, assemble_weight,
                             export_matrix, export_operator, import_matrix)
from .scalar_fields import ConstantScalar, EigenProductScalar, PolynomialScalar, scalar_from_config
from .spectrum import (Cluster, Spectrum, TrackResult, cluster, isolating_intervals, renormalize,
                       solve, spectrum_csv, track)
from .shape_calculus import (SplittingMatrix, boundary_density, derivative_via_transformed_form,
                             deviation, hadamard_check, pohozaev_residual, pohozaev_terms, remix,
                             splitting_matrix_domain, splitting_matrix_potential,
                             splitting_matrix_weight)
from .problem import Problem
from .genericity import SimplificationPlan, SimplificationReport, simplify
from .config import ExperimentConfig

__version__ = "0.1.0"
