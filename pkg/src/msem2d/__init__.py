"""Mimetic spectral element discretization of the Poisson equation for
volume forms on single and dual 2D grids."""

from .assembly import (
    HodgeMatrix,
    MassMatrix,
    hodge_02,
    hodge_11_dual_to_primal,
    mass_matrix,
)
from .basis import (
    DiscreteForm,
    GLLRule,
    NumericalFailureError,
    SpectralBasis1D,
    edge_eval,
    gll_basis,
    gll_rule,
    lagrange_eval,
    project,
    reconstruct,
    reduce_form,
)
from .geometry import (
    BIUNIT,
    UNIT,
    CurvilinearMap,
    MetricData,
    Rect,
    SingularMapError,
    crazy_map,
    metric_at,
    pullback,
)
from .mesh import Mesh2D, build_mesh
from .solvers import (
    PoissonProblem,
    Solution,
    SolverFailureError,
    conservation_residual,
    solve,
    solve_dual,
    solve_single,
    source_cochain,
)
from .topology import (
    Chain,
    Cochain,
    DualGrid,
    IncidenceMatrix,
    TensorCellComplex,
    build_dual_grid,
    build_primal_complex,
    coboundary,
    incidence_matrix,
)

__version__ = "0.1.0"
