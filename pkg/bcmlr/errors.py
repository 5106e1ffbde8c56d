"""
Exceptions raised by the library. Each one carries the exit code the command line
front end should use when it bubbles up from a command.
"""

EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3
EXIT_IO = 4


class BcmlrError(Exception):
    exit_code = 1


class InvalidInputError(BcmlrError, ValueError):
    "Malformed data or out of range parameters."
    exit_code = EXIT_VALIDATION


class InfeasibleConfigError(BcmlrError):
    """
    The requested number of changepoints, minimum segment length and series length
    admit no valid changepoint configuration (or some full conditional has empty support).
    """
    exit_code = EXIT_VALIDATION


class UndefinedAucError(InvalidInputError):
    "AUC requested on labels that don't contain both classes."


class NumericalError(BcmlrError, ArithmeticError):
    exit_code = EXIT_NUMERICAL

    def __init__(self, message, condition=None):
        if condition is not None:
            message = f'{message} (condition number {condition:.3e})'
        super().__init__(message)
        self.condition = condition
