class FlexVarError(Exception):
    """
    Inherited from Exception to provide the proper name for the error being
    raised.
    """

    def __init__(self, name: str):
        super().__init__(name)
        self.name = name


class SpecValidationError(FlexVarError, ValueError):
    """Inconsistent model specification, configuration or input data."""

    def __init__(self, name: str, line: int | None = None):
        if line is not None:
            name = f"line {line}: {name}"
        super().__init__(name)
        self.line = line


class NumericalError(FlexVarError, ArithmeticError):
    """Base for failures of the numerical kernels."""


class DistributionError(NumericalError, ValueError):
    """Distribution parameters outside the normalizable region."""


class IllConditionedError(NumericalError):
    """Posterior precision of a Gaussian regression is not usable."""

    def __init__(self, name: str, condition: float | None = None):
        super().__init__(name)
        self.condition = condition


class FilterError(NumericalError):
    """Filtered covariance lost positive-definiteness."""

    def __init__(self, name: str, t: int | None = None):
        super().__init__(name)
        self.t = t


class NonStationaryError(NumericalError):
    """Companion matrix with spectral radius >= 1 (or I - B singular)."""

    def __init__(self, name: str, t: int | None = None):
        super().__init__(name)
        self.t = t


class SweepError(NumericalError):
    """
    A block failed inside ``run_chain``. ``partial`` holds the draws stored up
    to the last complete sweep.
    """

    def __init__(
        self,
        name: str,
        sweep: int,
        equation: int,
        block: str,
        partial=None,
    ):
        super().__init__(
            f"sweep {sweep}, equation {equation}, block {block}: {name}"
        )
        self.sweep = sweep
        self.equation = equation
        self.block = block
        self.partial = partial
