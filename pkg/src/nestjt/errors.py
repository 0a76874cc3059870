"""Exception hierarchy."""


class NestJTError(Exception):
    pass


class DomainError(NestJTError, ValueError):
    """Bad variable set, state index or table shape."""


class StructuralError(NestJTError):
    """Graph or tree structure violates a precondition."""


class InconsistencyError(NestJTError, ArithmeticError):
    """Nonzero divided by zero, or zero total mass."""


class InconsistentEvidenceError(InconsistencyError):
    pass


class PotentialOverflowError(NestJTError, OverflowError):
    pass


class ResourceLimitError(NestJTError, MemoryError):
    pass


class PropagationError(NestJTError):
    """Operation invoked in the wrong propagation state."""


class NetworkFormatError(NestJTError, ValueError):
    def __init__(self, message, where="$"):
        super().__init__(f"{where}: {message}")
        self.message = message
        self.where = where
        self.source = None
