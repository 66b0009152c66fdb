"""Exception types shared across the package."""


class PosetForgeError(Exception):
    """Base class for all library errors."""


class CycleDetected(PosetForgeError):
    """Transitive closure would force x < x."""


class UnknownElement(PosetForgeError):
    pass


class SizeBound(PosetForgeError):
    """Input exceeds the configured brute-force size bound."""


class NotAPartition(PosetForgeError):
    pass


class InvalidTriple(PosetForgeError):
    pass


class HostMismatch(PosetForgeError):
    """Two triples do not live over the same host poset."""


class NotInLambda(PosetForgeError):
    pass


class OracleUnavailable(PosetForgeError):
    """The adapter cannot answer a limit/dominating-set query."""


class WrongLimitMode(PosetForgeError):
    pass


class InconsistentWithK(PosetForgeError):
    """Requested growth of the auxiliary structure violates its sort rules."""


class PreconditionViolated(PosetForgeError):
    pass


class ForcedZConflictsAvoid(PosetForgeError):
    pass


class NotAcceptable(PosetForgeError):
    def __init__(self, violations):
        super().__init__("; ".join(violations) if violations else "not acceptable")
        self.violations = list(violations)


class NotAValidTriple(PosetForgeError):
    pass


class OrbitBudgetExhausted(PosetForgeError):
    pass


class BudgetExhausted(PosetForgeError):
    """Soft stop: partial universe is still returned with its ledger."""


class StageOutOfRange(PosetForgeError):
    pass


class BadConfig(PosetForgeError):
    pass


class CorruptArtifact(PosetForgeError):
    pass
