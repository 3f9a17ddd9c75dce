"""Nodal radial basis functions and implicit advection solvers in one dimension."""

from .errors import (ConfigError, NotPositiveDefiniteError, SeriesDivergenceError,
                     UnsupportedConfigurationError)
from .exact import (BallisticGaussian, ErrorSeries, ExactGaussian, VelocityProfile,
                    ballistic_peak, gaussian_value, max_error, series_stats, transit_time,
                    velocity_value)
from .interpolation import (KernelSystem, assemble_gram, eval_interpolant, kernel_derivative_matrix,
                            kernel_matrix, solve_weights)
from .kernels import (GaussianKernel, Polynomial, RadialKernel, apply_operator_I, build_wendland,
                      eval_kernel, make_kernel, wendland)
from .nodal import (NodalCoefficients, NodalDerivativeOperator, conservative_derivative,
                    derivative_from_coefficients, derivative_matrix, eval_nrbf, inner_product,
                    nodal_coefficients, nrbf_derivative_at, nrbf_interpolate, truncate_coefficients)
from .nodes import NodeSet, build_node_set, distance
from .solvers import (AdvectionOperator, AdvectionProblem, BoundarySpec, Scheme, SeriesConfig,
                      SolverRun, advection_matrix, apply_boundary, binomial_weight_g,
                      binomial_weight_rho, build_g_star, ci_step, direct_propagator, lw_step,
                      nrbf_step_direct, nrbf_step_series, rbf_derivative_operator, rbf_propagator,
                      rbf_step, run_simulation)

__version__ = "0.1.0"
