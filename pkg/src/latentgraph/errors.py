"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes are incompatible with the requested operation."""


class ContractError(ValueError):
    """A caller-side precondition was violated (bad value, not bad shape)."""


class ConfigurationError(ValueError):
    """Invalid or inconsistent configuration (bad key, bad mode, bad k, ...)."""


class ParseError(ValueError):
    """A data file could not be parsed; message names the file and line."""

    def __init__(self, path, line_no, message):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


class DegenerateInputError(ValueError):
    """Input admits no meaningful result (e.g. fewer points than clusters)."""


class TrainingDiverged(RuntimeError):
    """Loss became non-finite; carries diagnostics for the failing iteration."""

    def __init__(self, iteration, loss, grad_norms):
        super().__init__(
            f"non-finite loss {loss!r} at iteration {iteration}; "
            f"gradient norms: {grad_norms}"
        )
        self.iteration = iteration
        self.loss = loss
        self.grad_norms = grad_norms
