"""startomo: forward simulation and inversion of the star transform.

The star transform is a weighted sum of ray integrals sharing a common
vertex, scanned over a strip. In the Fourier domain the transform becomes a
family of diagonal-plus-separable linear systems, one per transverse
frequency, which this package assembles, analyzes for stability and inverts.
"""

from .geometry import (CoefficientMatrix, GeometryError, StarGeometry,
                       default_scheme, exit_distance, make_geometry,
                       validate_coefficients)
from .stability import (SigmaMoments, StabilityReport, classify, count_zeros,
                        f_theta, halfplane_confined, sigma_moments)
from .phantoms import (Ellipse, ImageGrid, Phantom, Rectangle,
                       fourier_coefficients, line_integral, make_shepp_logan,
                       make_square_phantom, point_value, rasterize)
from .forward import (DataField, DataGrid, PairwiseField, add_poisson_noise,
                      analytic_data_coefficients, combine_pairs,
                      pairwise_fields, plan_grid, ray_integral, star_transform)
from .spectral import (CoefficientTable, ReducedSystem, ResonantFrequencyError,
                       SpectralSystem, assemble, boundary_average,
                       coefficients_to_image, field_to_coefficients,
                       projection_reduce)
from .solvers import (DiagPlusSeparable, DirectSolution, PseudoInverseState,
                      ReconstructionResult, ReductionCoefficients, SolverError,
                      apply_pinv, direct_solve, reconstruct, recursive_pinv,
                      series_mjk, solve_q0)
from .localrec import (VectorField, VectorScheme, divergence_reconstruct,
                       solve_sigmas, vector_combine)
from .config import ConfigError, ExperimentConfig, load_config
from .cli import TABLE1_CASES, case_geometry

__version__ = "0.1.0"
