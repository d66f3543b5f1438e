"""Exception hierarchy shared by the solvers, oracles and the command line."""


class CaraError(Exception):
    """Base class for every error raised by :mod:`sparsecara`."""

    exit_code = 1


class ParameterError(CaraError, ValueError):
    """An argument is outside its admissible range."""

    exit_code = 2


class InputError(CaraError, ValueError):
    """Malformed input file or inconsistent dimensions."""

    exit_code = 2


class NumericFailure(CaraError, ArithmeticError):
    """A non-finite value appeared where a finite one is required."""

    exit_code = 3


class ConvergenceFailure(CaraError):
    """The iteration budget ran out before the accuracy target was met.

    The partial result (a trace or a combination) is kept in ``result``.
    """

    exit_code = 3

    def __init__(self, message, result=None):
        super().__init__(message)
        self.result = result


class ContractViolation(CaraError):
    """An oracle or callback broke its declared contract."""

    exit_code = 4


class AssumptionViolated(ContractViolation):
    """A caller-asserted geometric assumption was observed to be false."""


class InfeasibleError(ContractViolation):
    """The oracle's feasible set is empty (e.g. sink unreachable)."""


class MatroidContractError(ContractViolation):
    """Greedy could not complete a base of the declared rank."""


class PSDViolation(ContractViolation):
    """A kernel that must be positive semidefinite is not."""
