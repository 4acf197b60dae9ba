"""eulerlu: sparse approximate LU factorizations of Eulerian directed-graph
Laplacians, used as preconditioners for directed Laplacian linear systems,
with a dense verification oracle for desk-scale checking."""

from .errors import (
    AttemptsExhaustedError,
    BudgetExceededError,
    DimensionMismatchError,
    DivergenceError,
    EmptyDistributionError,
    EmptyPoolError,
    EulerLUError,
    IndexOutOfRangeError,
    InvalidSpecError,
    InvariantViolationError,
    IsolatedVertexError,
    KernelMismatchError,
    NegativeWeightError,
    NonConvergentPhasesError,
    NonFiniteError,
    NotConvergedError,
    NotEulerianError,
    NotLaplacianError,
    NotPsdError,
    SingularPivotBlockError,
    TooLargeError,
    ZeroInteriorPivotError,
)
from .laplacian import (
    DirectedLaplacian,
    ValidationReport,
    from_edge_list,
    is_eulerian,
    undirectification,
    validate,
)
from .generate import GraphSpec, generate, random_eulerian
from .elimination import (
    EliminationStar,
    SparseBipartiteSample,
    WeightedIndexSampler,
    elimination_error_norm,
    elimination_error_norm_diag,
    pair_marginals,
    single_vertex_elim,
    star_local_undirectification,
)
from .rcdd import RcddParams, find_rcdd_block, is_alpha_rcdd
from .sparsify import (
    SparsifierConfig,
    default_nnz_target,
    degree_match_defect,
    measure_sparsifier,
    sparsify_eulerian,
)
from .lu import (
    LUFactorization,
    PhaseResult,
    SolverConfig,
    eulerian_lu,
    select_low_degree_vertex,
    single_phase,
    theoretical_sample_count,
)
from .solver import (
    SolveReport,
    approx_pinv_quality,
    materialize_inverse,
    richardson,
    solve_eulerian,
)
from . import graph_io, oracle

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
