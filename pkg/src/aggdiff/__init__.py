"""Stationary states and dynamics of d_t rho = d_x(rho d_x(eps rho - G * rho)).

The package provides interaction kernels, grid and quadrature utilities,
the dissipated energy functional, an explicit finite-difference evolution,
an eigenvalue-based construction of the steady states, and an executable
property suite for the existence threshold and the steady-state structure.
"""

from __future__ import annotations

__version__ = "0.1.0"

from .energy import (
    EmptySupport,
    EnergyReport,
    MassNotZero,
    energy,
    second_variation,
    steady_constant,
    steady_residual,
    symmetric_decreasing_rearrangement,
)
from .evolution import (
    Instability,
    SimConfig,
    SimTrace,
    auto_dt,
    load_config,
    run,
    step,
)
from .grid import (
    DensityField,
    Grid1D,
    ZeroMass,
    center_of_mass,
    convolve,
    gaussian_bump,
    load_field_csv,
    quadrature,
    save_field_csv,
    support_mask,
    uniform_bump,
)
from .kernels import (
    Kernel,
    NonDifferentiable,
    gaussian_kernel,
    kernel_from_config,
    laplace_kernel,
    normalize,
    tabulated_kernel,
)
from .steady import (
    EigenResult,
    EpsilonOutOfRange,
    HalfSupportProblem,
    NoConvergence,
    ZeroEigenfunction,
    apply_profile_operator,
    apply_slope_operator,
    epsilon_curve,
    leading_eigenpair,
    reconstruct_rho,
    richardson_ratio,
    solve_for_epsilon,
)
from .verify import (
    CheckReport,
    check_steady_shape,
    check_support_connected,
    check_threshold,
    run_full_suite,
)
