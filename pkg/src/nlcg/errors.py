"""Exception types shared across the solver modules."""


class CapExceededError(ValueError):
    """Raised when a request would exceed a configured enumeration cap."""

    def __init__(self, cap_name: str, requested: int, cap: int):
        self.cap_name = cap_name
        self.requested = requested
        self.cap = cap
        super().__init__(f"{cap_name} cap exceeded: requested {requested}, cap is {cap}")


class InvalidStateError(RuntimeError):
    """Raised when an environment is stepped from a state that does not allow it."""
