"""Exception types raised across the package."""


class NormNetError(Exception):
    pass


class DimensionError(NormNetError, ValueError):
    """Shapes of matrices, vectors or networks do not line up."""


class RegimeError(NormNetError, ValueError):
    """A formula was evaluated outside the parameter regime where it holds."""


class InfeasibleBudgetError(NormNetError, ValueError):
    """No construction fits inside the requested norm budget."""


class ResourceCapError(NormNetError, MemoryError):
    """A construction would exceed the configured weight-count cap."""


class DivergenceError(NormNetError, RuntimeError):
    def __init__(self, epoch, loss):
        super().__init__(f"training diverged at epoch {epoch} (loss={loss:.3g})")
        self.epoch = epoch
        self.loss = loss


class ConfigError(NormNetError, ValueError):
    def __init__(self, diagnostics):
        self.diagnostics = list(diagnostics)
        msg = "; ".join(f"{d.field}: {d.reason}" for d in self.diagnostics)
        super().__init__(f"invalid config: {msg}")


class Diagnostic:
    """One problem found while validating a configuration."""

    __slots__ = ("field", "reason")

    def __init__(self, field: str, reason: str):
        self.field = field
        self.reason = reason

    def __repr__(self):
        return f"Diagnostic({self.field!r}, {self.reason!r})"

    def __eq__(self, other):
        return isinstance(other, Diagnostic) and (self.field, self.reason) == (other.field, other.reason)

    def as_dict(self):
        return {"field": self.field, "reason": self.reason}
