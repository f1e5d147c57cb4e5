"""Numerical laboratory for fractional-operator layer dynamics.

Modules:
    fracop    -- singular-kernel operator quadrature (line / periodic / 2d)
    potential -- periodic multi-well potentials and space-time forcing
    layer     -- standing transition profiles and their drive correctors
    cell      -- cell evolutions on the torus and effective speeds
    homog     -- oscillatory problems, effective laws, convergence reports
    hull      -- hull-function ansatz, lattice series, residual checks
    runio     -- run configs and deterministic result files
    cli       -- `fracpn` batch entry point
"""

from .fracop import (
    GridField,
    TailModel,
    levy_apply_quadrature,
    levy_apply_spectral,
    line_plan,
    normalization_constant,
    periodic_plan,
    plan_2d,
)
from .potential import Forcing, ForcingTerm, PeriodicPotential
from .layer import (
    CorrectorSolution,
    LayerSolution,
    check_layer_decay,
    compute_c0,
    solve_corrector_psi,
    solve_layer,
)
from .cell import CellProblemSpec, as_rational, hbar, hbar_table, solve_cell_evolution
from .homog import (
    DriveLaw,
    EffectiveProblemSpec,
    EpsProblemSpec,
    InitialProfile,
    SlopeLaw,
    branch_exponents,
    convergence_report,
    solve_effective,
    solve_eps_problem,
)
from .hull import (
    CutoffFunction,
    HullAnsatz,
    bilinear_form_B,
    build_ansatz,
    claim1_series,
    nl_residual,
    orowan_check,
)

__version__ = "0.1.0"
