"""Probabilistic 2D Navier-Stokes vorticity solver on the unit torus."""

from ._core import (
    BrownianPath,
    ConfigError,
    ConvergenceError,
    DomainError,
    Error,
    Field,
    NumericalError,
    Solution,
    SolverConfig,
    Trajectory,
    __version__,
    apply_K,
    bsde_residual,
    curl,
    divergence,
    evolve,
    heat_solution,
    load_bundle,
    load_field,
    load_trajectory,
    picard_solve,
    random_field,
    save_bundle,
    save_field,
    save_trajectory,
    select_alpha,
    simulate,
    z_bmo_bound,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
