"""Exception hierarchy for the eulerlu package.

Every error raised by the library derives from EulerLUError so callers
(CLI, service) can map failures to exit codes / HTTP statuses uniformly.
"""


class EulerLUError(Exception):
    """Base class for all eulerlu errors."""


class NegativeWeightError(EulerLUError):
    """An edge weight was negative."""


class IndexOutOfRangeError(EulerLUError):
    """A vertex index fell outside [0, n)."""


class InvalidSpecError(EulerLUError):
    """A graph generation spec was malformed or unsatisfiable."""


class NotLaplacianError(EulerLUError):
    """An imported matrix does not have directed-Laplacian structure."""


class NonFiniteError(EulerLUError):
    """A matrix contained NaN or infinite entries."""


class SingularPivotBlockError(EulerLUError):
    """The pivot block of a Schur complement is numerically singular."""


class NotPsdError(EulerLUError):
    """A matrix required to be positive semidefinite is not."""


class KernelMismatchError(EulerLUError):
    """Kernel containment required by an operation does not hold."""


class DimensionMismatchError(EulerLUError):
    """Operands have incompatible dimensions."""


class TooLargeError(EulerLUError):
    """An input exceeds the dense-oracle size guard."""


class InvariantViolationError(EulerLUError):
    """An internal invariant (mass balance, Eulerian closure, ...) failed."""


class EmptyDistributionError(EulerLUError):
    """A weighted sampler was asked to draw from zero total mass."""


class IsolatedVertexError(EulerLUError):
    """A vertex with no incident edges cannot be eliminated."""


class EmptyPoolError(EulerLUError):
    """A selection pool was empty."""


class AttemptsExhaustedError(EulerLUError):
    """Randomized block selection failed more often than allowed."""


class NotEulerianError(EulerLUError):
    """An operation requires an Eulerian Laplacian and the input is not one."""


class BudgetExceededError(EulerLUError):
    """The exact-passthrough sparsifier was given more nonzeros than its budget."""


class NonConvergentPhasesError(EulerLUError):
    """The multi-phase elimination driver exceeded its phase guard."""


class ZeroInteriorPivotError(EulerLUError):
    """A pivot other than the final one vanished; the factorization is broken."""


class DivergenceError(EulerLUError):
    """The iterative solve diverged (residual grew 10x over its minimum)."""


class NotConvergedError(EulerLUError):
    """The iterative solve hit its iteration cap before reaching the target.

    Carries the partial solution and report as attributes when available.
    """

    def __init__(self, message, x=None, report=None):
        super().__init__(message)
        self.x = x
        self.report = report
