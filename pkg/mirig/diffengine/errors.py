class ShapeError(ValueError):
    """
    Raised before execution when declared and actual shapes disagree, or when a
    gradient is requested from a non-scalar output.

    """


class NonFiniteError(ArithmeticError):
    def __init__(
        self,
        message: str,
        *,
        node_id: int | None = None,
        parameter: str | None = None,
    ):
        super().__init__(message)
        self.node_id = node_id
        self.parameter = parameter
