"""Exception hierarchy shared by all modules."""


class ElastoScatterError(Exception):
    """Base class for package errors."""


class ParameterError(ElastoScatterError, ValueError):
    """An input violates a documented constraint."""


class SingularityError(ElastoScatterError, ValueError):
    """A kernel was evaluated at coincident source and target points."""


class SolverError(ElastoScatterError, ArithmeticError):
    """A linear system is numerically singular.

    ``condition`` carries the estimated condition number when available.
    """

    def __init__(self, message, condition=None):
        super().__init__(message)
        self.condition = condition


class RankError(SolverError):
    """A matrix expected to have full row rank does not."""


class DatasetError(ElastoScatterError, ValueError):
    """A dataset or scene file is malformed or has an unsupported version."""


class ConfigError(ElastoScatterError, ValueError):
    """Inconsistent run configuration (e.g. test vector kind vs. channel)."""
