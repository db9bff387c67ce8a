"""Cylindrical Hardy-Sobolev toolkit.

Computes ground states of the cylindrical Hardy-Sobolev quotient, the
geometric constants of the second-order concentration expansion, curvature
invariants of immersed closed submanifolds, and verifies the expansion and
the resulting existence criterion numerically.
"""

from .params import (
    ConfigError,
    ParameterError,
    ProblemParams,
    ToleranceConfig,
    load_config,
    make_params,
    parse_config,
)
from .grids import Grid2D, sinh_nodes, sphere_area
from .groundstate import (
    CollapseError,
    ConvergenceError,
    DecayReport,
    GroundState,
    RadialProfile,
    check_decay,
    el_residual,
    export_csv,
    load_state,
    save_state,
    solve_ground_state,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "ParameterError",
    "ProblemParams",
    "ToleranceConfig",
    "load_config",
    "make_params",
    "parse_config",
    "Grid2D",
    "sinh_nodes",
    "sphere_area",
    "CollapseError",
    "ConvergenceError",
    "DecayReport",
    "GroundState",
    "RadialProfile",
    "check_decay",
    "el_residual",
    "export_csv",
    "load_state",
    "save_state",
    "solve_ground_state",
    "__version__",
]
