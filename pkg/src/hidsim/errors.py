"""Exception types shared across the package.

Exit-code mapping used by the CLI: ConfigError -> 1, DataError -> 2,
ProtocolError / SolverError -> 3. Plain ValueError is reserved for
programming-contract violations (bad dimensions, invalid labels, ...).
"""


class HidsimError(Exception):
    exit_code = 3


class ConfigError(HidsimError):
    """Invalid or inconsistent run configuration."""

    exit_code = 1


class TopologyError(ConfigError):
    """Generated topology violates reachability requirements."""


class DataError(HidsimError):
    """Problems with the input corpus or derived datasets."""

    exit_code = 2


class ParseError(DataError):
    def __init__(self, message, line_no=None):
        super().__init__(message)
        self.line_no = line_no


class UnknownLabelError(DataError):
    """Attack name missing from the category map."""


class InsufficientDataError(DataError):
    """Corpus exhausted while drawing training/test samples."""


class ProtocolError(HidsimError):
    """Distributed training or detection protocol failure."""

    exit_code = 3


class AgentNotReadyError(ProtocolError):
    """Detection requested before the agent holds a converged model."""


class SolverError(HidsimError):
    """SMO failed to converge within the iteration budget."""

    exit_code = 3

    def __init__(self, message, iterations=None):
        super().__init__(message)
        self.iterations = iterations
