"""Exception types shared across the package."""


class ArityError(ValueError):
    """Input length does not match the arity of the function or state."""


class CapabilityError(RuntimeError):
    """Requested computation exceeds a documented enumeration or dimension cap."""


class BudgetExceededError(RuntimeError):
    """A sampling primitive would exceed the copy budget of its ledger."""


class ContractError(ValueError):
    """Caller violated an operation contract (e.g. non-symmetric matrix)."""


class InternalConsistencyError(RuntimeError):
    """Two supposedly-equivalent computation paths disagree.

    Raised when an exact closed form fails its cross-check (non-exact
    division, divergent dual evaluation).  Signals a transcription bug,
    never a numerical tolerance issue.
    """


class TheoremViolationError(RuntimeError):
    """An exhaustively checked structural property failed on real data."""
