class DomainError(ValueError):
    pass


class BudgetExceeded(RuntimeError):
    """Raised when a search or sampler runs out of its budget.

    `best` carries whatever partial answer was available (a lower bound for
    maximisation searches), or None.
    """

    def __init__(self, msg, best=None):
        super().__init__(msg)
        self.best = best


class ConfigError(ValueError):
    def __init__(self, msg, field=None):
        super().__init__(msg if field is None else f"{field}: {msg}")
        self.field = field
