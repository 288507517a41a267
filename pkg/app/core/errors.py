from typing import Any, Optional, Sequence, Tuple


class ZZLabError(Exception):
    """Base class for every error raised by the toolkit"""


class InvalidTruncationError(ZZLabError):
    pass


class ContractViolationError(ZZLabError):
    pass


class ResonanceError(ZZLabError):
    """A perturbative denominator vanished (or nearly so)"""

    def __init__(self, factor: str, value: float):
        self.factor = factor
        self.value = value
        super().__init__(f"Resonant denominator {factor} = {value:.3g} MHz")


class LabelingError(ZZLabError):
    def __init__(self, labels: Sequence[Tuple[int, int]], message: str = ""):
        self.labels = list(labels)
        super().__init__(message or f"Ambiguous dressed-state assignment for labels {self.labels}")


class FitError(ZZLabError):
    """Optimizer gave up; best_point holds the lowest-cost parameters seen"""

    def __init__(self, message: str, best_point: Optional[Any] = None):
        self.best_point = best_point
        super().__init__(message)


class InsufficientDataError(ZZLabError):
    pass


class ModelMismatchError(ZZLabError):
    pass


class AliasingError(ZZLabError):
    pass


class StepTooCoarseError(ZZLabError):
    pass


class LowContrastError(ZZLabError):
    pass


class CalibrationError(ZZLabError):
    pass


class IngestionError(ZZLabError):
    def __init__(self, source: str, row: int, column: str, message: str):
        self.source = source
        self.row = row
        self.column = column
        super().__init__(f"{source}: row {row}, column '{column}': {message}")


class ConfigError(ZZLabError):
    def __init__(self, name: str, message: str = ""):
        self.name = name
        super().__init__(message or f"Unknown or invalid config entry '{name}'")
