"""
Exception hierarchy for mudkit

Every failure raised by the package derives from MudkitError so the CLI
can map it to an exit code:
- ConfigError / ShapeError -> usage problems (exit 2)
- NumericalError and subclasses -> numerical failures (exit 3)
"""

from typing import Optional


class MudkitError(Exception):
    """Base class for all mudkit errors"""


class ShapeError(MudkitError, ValueError):
    """Operand shapes do not fit the operation"""

    def __init__(self, op: str, *shapes, detail: str = ""):
        self.op = op
        self.shapes = shapes
        shape_txt = " vs ".join(str(tuple(s)) for s in shapes)
        message = f"{op}: shape mismatch {shape_txt}"
        if detail:
            message += f" ({detail})"
        super().__init__(message)


class ConfigError(MudkitError, ValueError):
    """Invalid configuration, spectrum spec or flag combination"""


class NumericalError(MudkitError, ArithmeticError):
    """A kernel could not produce a trustworthy result"""


class SingularTriangularError(NumericalError):
    """Triangular factor has a diagonal entry below the floor"""

    def __init__(self, row: int, value: float, floor: float):
        self.row = row
        self.value = value
        self.floor = floor
        super().__init__(
            f"singular triangular factor: |T[{row}][{row}]| = {abs(value):.3e} < {floor:.1e}"
        )


class NotSPDError(NumericalError):
    """Cholesky met a non-positive pivot"""

    def __init__(self, pivot: int, value: float, floor: Optional[float] = None):
        self.pivot = pivot
        self.value = value
        self.floor = floor
        message = f"matrix is not SPD: pivot {pivot} = {value:.3e}"
        if floor is not None:
            message += f" (floor {floor:.1e})"
        super().__init__(message)


class RankDeficientError(NumericalError):
    """Matrix is numerically rank deficient"""

    def __init__(self, ratio: float, threshold: float):
        self.ratio = ratio
        self.threshold = threshold
        super().__init__(
            f"rank deficient input: sigma_min/sigma_max = {ratio:.3e} <= {threshold:.1e}"
        )


class IterationLimitError(NumericalError):
    """Iterative kernel did not converge within its sweep cap"""

    def __init__(self, routine: str, sweeps: int, residual: float):
        self.routine = routine
        self.sweeps = sweeps
        self.residual = residual
        super().__init__(
            f"{routine} did not converge after {sweeps} sweeps (residual {residual:.3e})"
        )


class NonFiniteError(NumericalError):
    """NaN or Inf where only finite values are allowed"""
