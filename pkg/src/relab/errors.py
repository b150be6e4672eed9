"""Exception hierarchy shared by all relab modules.

Every error carries the process exit code the CLI maps it to:
2 for configuration problems, 3 for data/format problems, 4 for
solver/training failures.
"""


class RelabError(Exception):
    """Base class for all relab errors."""

    exit_code = 1


class ConfigError(RelabError):
    """Invalid parameter or option combination."""

    exit_code = 2


class FormatError(RelabError):
    """File missing, unreadable, or not conforming to its declared format."""

    exit_code = 3


class DataError(RelabError):
    """Well-formed file whose payload violates a data invariant (NaN/Inf...)."""

    exit_code = 3


class DegenerateInputError(RelabError):
    """Input is structurally valid but degenerate (zero rows, rank 0...)."""

    exit_code = 3


class IsolatedNodeError(RelabError):
    """Graph has nodes with zero degree; normalization is undefined."""

    exit_code = 3

    def __init__(self, node_indices):
        self.node_indices = list(node_indices)
        super().__init__(
            f"graph has {len(self.node_indices)} isolated node(s) with zero "
            f"row-sum: {self.node_indices[:20]}"
        )


class GenerationError(RelabError):
    """Synthetic data generation could not satisfy its constraints."""

    exit_code = 3


class SolverError(RelabError):
    """Iterative solver failed to reach the requested tolerance."""

    exit_code = 4

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class TrainingDivergedError(RelabError):
    """Probe training produced non-finite losses."""

    exit_code = 4
