class ConstructionFailed(RuntimeError):
    """A randomized construction could not be certified."""

    def __init__(self, message, *, invariant=None, best=None):
        super().__init__(message)
        self.invariant = invariant
        self.best = best


class PeelFailure(RuntimeError):
    def __init__(self, message, *, layer):
        super().__init__(message)
        self.layer = layer
