"""Exception hierarchy.

Everything raised on purpose by this package derives from :class:`MpaError`,
so callers (and the CLI) can distinguish diagnosed failures from bugs.
"""


class MpaError(Exception):
    """Base class for all errors raised by mpatools."""


class GraphSyntaxError(MpaError):
    """Malformed graph source text.

    Carries the 1-based ``line`` and ``column`` of the offending token.
    """

    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class GraphValidationError(MpaError):
    """Structurally invalid graph (cycle, bad role wiring, unknown node)."""


class QueryError(MpaError):
    """Ill-posed d-separation query (unknown node, latent in the conditioning set)."""


class PathLimitError(MpaError):
    """Path enumeration exceeded the simple-path guard."""


class TransformError(MpaError):
    """Invalid graph transform (missing roles, bad pattern modification)."""


class CheckError(MpaError):
    """Ill-posed assumption-check request (duplicate patterns, bad extras)."""


class EstimationError(MpaError):
    """Estimation pipeline failure."""


class PatternSizeError(EstimationError):
    """A missingness pattern has fewer rows than ``min_pattern_size``."""


class SingleArmPatternError(EstimationError):
    """A missingness pattern contains only treated or only control rows."""


class ConvergenceError(EstimationError):
    """Logistic fit did not converge within the iteration budget."""


class PositivityError(EstimationError):
    """Fitted or supplied propensity scores are not strictly inside (0, 1)."""


class BootstrapError(EstimationError):
    """Too many bootstrap replicates failed."""


class ScenarioError(MpaError):
    """Invalid simulation scenario (missing mechanism, bad wiring)."""


class DataError(MpaError):
    """Malformed input data or configuration."""
