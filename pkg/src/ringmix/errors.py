"""Exception hierarchy shared by every ringmix module."""


class RingmixError(Exception):
    """Base for all domain errors; the CLI maps these to exit status 1."""

    kind = "error"


class TraceParseError(RingmixError):
    kind = "parse"


class TraceIntegrityError(RingmixError):
    kind = "integrity"


class InfeasibleError(RingmixError):
    """No injective spent-coin assignment exists."""

    kind = "infeasible"


class BlowUpError(RingmixError):
    """Permutation tree would exceed the configured leaf cap."""

    kind = "blow-up"


class NotDisjointSupersetError(RingmixError):
    kind = "not-ds"


class InvariantViolation(RingmixError):
    kind = "invariant"


class PreconditionError(RingmixError):
    kind = "precondition"


class NoEligibleRingError(RingmixError):
    kind = "no-eligible-ring"


class GameDidNotConverge(RingmixError):
    kind = "max-sweeps"


class BatchSpanError(RingmixError):
    kind = "batch-span"


class FreshGuardError(RingmixError):
    kind = "fresh-guard"
