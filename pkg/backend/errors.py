class ToolkitError(ValueError):
    """Base error for everything the CLI reports back to the caller.

    Args:
        detail (str): Human readable description of the failure.
        line (int, optional): 1-based line of the workspace document, when known.
    """

    exit_code = 1

    def __init__(self, detail: str, line: int | None = None):
        super().__init__(detail)
        self.detail = detail
        self.line = line

    def __str__(self) -> str:
        if self.line is not None:
            return f"line {self.line}: {self.detail}"
        return self.detail


class DocumentError(ToolkitError):
    exit_code = 2


class ReferenceResolutionError(DocumentError):
    pass


class MetricValidationError(ToolkitError):
    exit_code = 2


class ComputationLimitError(ToolkitError):
    exit_code = 3


class ArgumentError(ToolkitError):
    exit_code = 2
