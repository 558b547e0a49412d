"""Dirichlet solver for the dual Monge-Ampere equation in dimension 2."""
from .problem import (BoundaryData, CurvatureDensity, DomainSpec, MAProblem, constant_data,
                      constant_eta, default_eps_schedule, default_exhaustion, lambda_wedge_data,
                      lipschitz_samples_data, problem_from_config)
from .grid import DiscreteMA, build_stencils
from .solve import MASolution, exhaustion_solve, lower_simple_values, solve_fixed
from .barriers import BarrierSet, barrier_check, barrier_params_lipschitz, barrier_pass, build_barriers
from .diagnostics import (ConvexityVerdict, GaussMapReport, entire_graph_from_solution,
                          gradient_range_radius, refined_conjugate, strict_convexity_probe)
from .primal import PrimalSolution, prescribed_cone_solve, smoothed_support, solve_primal_disk
