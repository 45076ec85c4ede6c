"""Stationary mean field games with power Hamiltonians and the generalized
Hopf-Cole change of variables phi = m^(1/r)."""

from .core import (Coupling, GridFunction, HamiltonianParams, Interval, RadialBall,
                   conjugate_exponent, differentiate, differentiate_nodal, integrate,
                   linear_coupling, mu_coefficient, power_coupling, sample, zero_coupling)
from .errors import (AlignmentError, ConfigError, DomainError, HopfColeError,
                     NonconvergenceError, PositivityError, PreconditionError,
                     SingularJacobianError, SolverError, SolverFailure)
from .oracle import hjb_residual, kolmogorov_weak_residual, smooth_hamiltonian_guard, solve_coupled
from .rlaplace import discrete_energy, energy_gradient, lambda_from_phi, solve_rlaplace
from .solverconfig import SolverConfig, SolveTrace
from .transform import (AlignmentReport, MFGSolution, PhiSolution, check_gradient_alignment,
                        forward_transform, inverse_transform, quadratic_hopfcole_reference)
from .verify import (ResidualReport, cross_validate, proof_identity_suite,
                     rlaplace_weak_residual)

__version__ = "0.1.0"
