"""Exception hierarchy shared by the engines."""


class MobiusLqError(Exception):
    """Base class for all errors raised by mobius_lq."""


class NotInvariantError(MobiusLqError):
    """A map sends the closure of a candidate domain outside of it."""

    def __init__(self, map_index, witness):
        self.map_index = map_index
        self.witness = witness
        super().__init__(
            f"map {map_index} sends the candidate closure outside itself "
            f"(witness angle {witness:.12g})"
        )


class NoDomainFoundError(MobiusLqError):
    pass


class BudgetExceededError(MobiusLqError):
    """An enumeration grew beyond its configured cap."""

    def __init__(self, stage, size, cap):
        self.stage = stage
        self.size = size
        self.cap = cap
        super().__init__(f"{stage}: {size} items exceeds the budget of {cap}")


class NoSignChangeError(MobiusLqError):
    pass


class InsufficientGridError(MobiusLqError):
    pass


class ZeroMassError(MobiusLqError):
    pass


class NoSharedFixedPointError(MobiusLqError):
    pass


class CertificateFailedError(MobiusLqError):
    def __init__(self, step, matrix=None, detail=""):
        self.step = step
        self.matrix = matrix
        msg = f"certificate step {step!r} failed"
        if detail:
            msg += f": {detail}"
        super().__init__(msg)
