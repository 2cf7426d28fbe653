"""Exception hierarchy; the CLI maps each family to an exit status."""


class EchoscopeError(Exception):
    exit_code = 1


class InputError(EchoscopeError, ValueError):
    """Bad input file, schema violation, or invalid parameter."""

    exit_code = 2


class MissingArtifactError(EchoscopeError, FileNotFoundError):
    """An upstream stage artifact is absent."""

    exit_code = 3


class NumericalError(EchoscopeError, ArithmeticError):
    """A numerical routine failed (non-convergence, degenerate input)."""

    exit_code = 4


class ConvergenceError(NumericalError):
    """Iterative solver stopped without meeting its tolerance.

    ``last_iterate`` holds the final vector and ``iterations`` the step count.
    """

    def __init__(self, message, last_iterate=None, iterations=None):
        super().__init__(message)
        self.last_iterate = last_iterate
        self.iterations = iterations
