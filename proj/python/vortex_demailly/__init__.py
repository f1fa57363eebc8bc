"""Python bindings for the vortex-bundle continuity solver.

Fields are n x n float arrays indexed ``[x, y]`` on the periodic grid.
"""

from ._core import (
    SUMMARY_SCHEMA_VERSION,
    Grid,
    Params,
    RunConfig,
    Section,
    SolverConfig,
    State,
    VortexError,
    compare,
    determinant_lhs,
    fd_check,
    laplacian,
    load_config,
    omega_mean,
    parse_config,
    poisson_solve,
    positivity,
    resample,
    residual_sys1_psi,
    residual_sys2_psi,
    run,
    solve_system,
    solve_t0,
    theta_section,
    verify,
    zero_section,
)

__all__ = [name for name in dir() if not name.startswith("_")]
