"""Numerical laboratory for nonlinear elliptic problems on oscillating
domains: meshing of rough and two-layer geometries, monotone operator
families, a P1 solver, the degenerate limit problem, periodic unfolding
diagnostics, and convergence sweeps."""

from .errors import (
    BracketFailure,
    ConfigError,
    DegeneratePlusLayerWarning,
    EpsMeshMismatch,
    HomlabError,
    HypothesisViolation,
    IncompatibleGeometry,
    InvalidProfile,
    MeshFieldMismatch,
    MismatchedMeshes,
    MissingRegionTags,
    NonConvergence,
    OutsideDomain,
    PointOutsideDomain,
    ResolutionTooCoarse,
    SingularColumn,
    UnknownRegionTag,
)
from .geometry import (
    DensityField,
    EtaProfile,
    Mesh,
    build_mesh_eps,
    build_mesh_limit,
    eta_envelopes,
    fiber_measure,
)
from .operators import (
    HypothesisReport,
    OperatorSpec,
    check_hypotheses,
    effective_a2,
    solve_a1_root,
)
from .fem import Field, SolveInfo, SolverOptions, solve_nonlinear
from .limit import LimitSolution, solve_limit
from .unfolding import (
    UnfoldGrid,
    build_unfold_grid,
    check_algebra,
    check_integral_lemma,
    unfold_field,
)
from .harness import SweepConfig, SweepReport, make_source, run_sweep

__version__ = "0.1.0"
