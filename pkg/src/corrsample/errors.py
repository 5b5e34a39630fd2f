"""Exception hierarchy. Each class maps to a CLI exit code."""


class CorrSampleError(Exception):
    exit_code = 1


class InvalidInputError(CorrSampleError, ValueError):
    exit_code = 2


class ResourceLimitError(CorrSampleError):
    exit_code = 3

    def __init__(self, message: str, size: int | None = None):
        super().__init__(message)
        self.size = size


class InvariantViolation(CorrSampleError, AssertionError):
    exit_code = 4
