"""Exception hierarchy.

Every error carries the CLI exit code it maps to: 2 for validation problems,
3 for plugin failures, 4 for I/O.
"""
from __future__ import annotations


class HarnessError(Exception):
    exit_code = 2


class ParseError(HarnessError):
    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        where = ""
        if source:
            where += f"{source}"
        if line is not None:
            where += f"{':' if where else 'line '}{line}"
        super().__init__(f"{where}: {message}" if where else message)


class UnknownClassError(HarnessError):
    pass


class InvalidBoxError(HarnessError):
    pass


class DegenerateBoxError(InvalidBoxError):
    pass


class ReferentialIntegrityError(HarnessError):
    pass


class DuplicateSampleError(HarnessError):
    pass


class BudgetError(HarnessError):
    pass


class SelectionConsistencyError(HarnessError):
    pass


class NormalizationError(HarnessError):
    pass


class SpecError(HarnessError):
    pass


class EmptyTrainingSetError(HarnessError):
    pass


class UndefinedAPError(HarnessError):
    pass


class KeyMismatchError(HarnessError):
    pass


class ConfigMismatchError(HarnessError):
    pass


class ConfigError(HarnessError):
    pass


class ManifestError(HarnessError):
    pass


class ResumeError(HarnessError):
    def __init__(self, message: str, iteration: int | None = None):
        self.iteration = iteration
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)


class PluginError(HarnessError):
    exit_code = 3


class PluginFailure(PluginError):
    def __init__(self, message: str, returncode: int | None = None, stderr: str = ""):
        self.returncode = returncode
        self.stderr = stderr
        super().__init__(message)


class ProtocolViolation(PluginError):
    pass


class PluginTimeout(PluginError):
    pass


class HarnessIOError(HarnessError):
    exit_code = 4
