from .operator import (BasisMeta, DiscreteOperator, assemble_potential, assemble_weight,
                       evaluate_scalar, export_matrix, export_operator, import_matrix)
from .spectral import SpectralBasis, assemble_1d_spectral
from .grid import (Grid, assemble_1d_grid, assemble_2d_grid, assemble_derivative_kernel,
                   assemble_mass_derivative, assemble_transformed_form, build_grid,
                   exterior_integral)
