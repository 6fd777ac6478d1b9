"""Grid and radial solvers for principal eigenvalues of Pucci-type operators.

The operators are F(p, X) = |p|^alpha M^{+/-}_{a,A}(X) with alpha > -1. The
package evaluates them, discretizes them with a monotone wide-stencil scheme,
solves Dirichlet problems, estimates the principal eigenvalue on grids and by
radial shooting, builds boundary barriers, and checks the maximum and
comparison principles on computed fields.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .analysis import (ModulusReport, PrincipleReport, check_comparison, check_max_principle,
                       check_uniqueness, measure_modulus, random_subsolution)
from .eigen import estimate_lambda_bar, power_polish, verify_eigenpair
from .exceptions import (BarrierFailureError, BracketError, ConfigError, DomainError,
                         IndeterminateLambdaError, InvalidInputError, NonConvergenceError, PoleError,
                         PucciEigenError, ResolutionError, SingularityError)
from .geometry import (Ball, BarrierField, Box, Domain, Interval, Star, boundary_barrier, distance_probe,
                       global_barrier, global_barrier_k)
from .grid import Grid, ScalarField, build_grid
from .operator import (AxiomReport, OperatorSpec, SymmetricMatrix, eval_F, eval_F_batch, pucci_extremal,
                       reflect_operator, verify_operator_axioms)
from .radial import EigenResult, RadialProfile, lemma1_bound, radial_F, shoot_eigen
from .solver import (IterationResult, apply_F_discrete, collatz_bounds, monotone_iterate,
                     solve_dirichlet)

__all__ = [
    "AxiomReport", "Ball", "BarrierField", "BarrierFailureError", "Box", "BracketError", "ConfigError",
    "Domain", "DomainError", "EigenResult", "Grid", "IndeterminateLambdaError", "Interval",
    "InvalidInputError", "IterationResult", "ModulusReport", "NonConvergenceError", "OperatorSpec",
    "PoleError", "PrincipleReport", "PucciEigenError", "RadialProfile", "ResolutionError", "ScalarField",
    "SingularityError", "Star", "SymmetricMatrix", "apply_F_discrete", "boundary_barrier", "build_grid",
    "check_comparison", "check_max_principle", "check_uniqueness", "collatz_bounds", "distance_probe",
    "estimate_lambda_bar", "eval_F", "eval_F_batch", "global_barrier", "global_barrier_k", "lemma1_bound",
    "measure_modulus", "monotone_iterate", "power_polish", "pucci_extremal", "radial_F",
    "random_subsolution", "reflect_operator", "shoot_eigen", "solve_dirichlet", "verify_eigenpair",
    "verify_operator_axioms",
]
