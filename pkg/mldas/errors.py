"""
Exception hierarchy shared by every mldas module.

Each class carries the process exit code the CLI uses when the error
escapes a subcommand: 1 usage/config, 2 data/validation, 3 internal.
"""

from typing import Optional


class MldasError(Exception):
    """Base class for all mldas errors"""
    exit_code = 3


class ConfigError(MldasError):
    """Invalid or infeasible configuration"""
    exit_code = 1


class MissingModelsError(MldasError):
    """Simulation requested before any model was trained"""
    exit_code = 1


class ParseError(MldasError):
    """A textual value (address, number) could not be parsed"""
    exit_code = 2


class SchemaError(MldasError):
    """A dataset header or row sequence does not match a known schema"""
    exit_code = 2


class DatasetValidationError(MldasError):
    """A dataset row violates a type invariant"""
    exit_code = 2

    def __init__(self, message: str, row_index: Optional[int] = None):
        super().__init__(message)
        self.row_index = row_index


class OrderingError(MldasError):
    """Rows were expected in timestamp order"""
    exit_code = 2


class SplitError(MldasError):
    """Chronological split violated a ratio or session constraint"""
    exit_code = 2

    def __init__(self, message: str, session: Optional[str] = None):
        super().__init__(message)
        self.session = session


class BalanceError(MldasError):
    """Balanced batches cannot be drawn from the given rows"""
    exit_code = 2


class TrainingError(MldasError):
    """A model could not be fitted"""
    exit_code = 3


class ArgumentError(MldasError):
    """Bad arguments to a numeric routine (lengths, arity)"""
    exit_code = 3


class SelectionError(MldasError):
    """No candidate model satisfies the selector's quality filter"""
    exit_code = 3


class ContractError(MldasError):
    """An operation was invoked with its precondition unmet"""
    exit_code = 3
