"""Exception types shared across the package."""


class CausalQTError(Exception):
    """Base class for every error raised by causalqt."""


class DimensionError(CausalQTError, ValueError):
    """Operator or state shapes do not match the site layout."""


class ParamError(CausalQTError, ValueError):
    """A parameter is outside its allowed range."""


class CompletenessError(ParamError):
    """A set of reduction operators fails sum_j A_j^dagger A_j = I."""


class BudgetError(CausalQTError):
    """Exact enumeration would exceed the outcome-tuple budget."""


class ScenarioError(CausalQTError, ValueError):
    """A scenario document failed validation.

    ``path`` addresses the offending field, e.g. ``events/1/kraus/theta``.
    """

    def __init__(self, message, path=""):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ZeroNormState(CausalQTError):
    """A reduction annihilated the state, so no normalized state exists.

    ``chain`` is the sequence of ``(event_id, outcome)`` pairs that was
    applied, ending with the pair that produced the zero vector.
    """

    def __init__(self, chain=(), norm_sq=0.0):
        self.chain = tuple(chain)
        self.norm_sq = norm_sq
        steps = " -> ".join(f"{eid}:{out}" for eid, out in self.chain) or "<none>"
        super().__init__(f"state annihilated (norm^2={norm_sq:.3g}) after {steps}")
