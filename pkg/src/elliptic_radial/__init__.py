"""Radial solutions of semilinear elliptic systems ``Delta u_i = p_i(x) f_i(u)`` on R^N.

Modules
-------
radial_core
    Radial grids and the exact Green operator of a piecewise-linear integrand.
problem
    Coefficient and nonlinearity families, problem specification, hypothesis audit.
conditions
    Integral criteria, monotonicity checks and the bounded/large classifier.
solver
    Picard iteration for the lower/upper envelopes, the majorant and the
    dominated iteration, largeness detection, audit of the a priori bounds.
oracle
    RK4 shooting and closed-form reference problems.
cli
    ``elliptic-radial`` command-line front end.
"""

from .conditions import evaluate_conditions
from .problem import ProblemSpec, make_coefficient, make_nonlinearity
from .radial_core import RadialFunction, RadialGrid, green_apply
from .solver import solve_lower, solve_majorant, solve_dominated, solve_upper

__all__ = [
    "ProblemSpec",
    "RadialFunction",
    "RadialGrid",
    "evaluate_conditions",
    "green_apply",
    "make_coefficient",
    "make_nonlinearity",
    "solve_dominated",
    "solve_lower",
    "solve_majorant",
    "solve_upper",
]

__version__ = "0.1.0"
