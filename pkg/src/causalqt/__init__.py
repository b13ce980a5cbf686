"""Causal quantum theory next to standard quantum theory on small systems.

Reduction events are scheduled at spacetime points. The causal engine
computes each event's outcome probabilities from the local state
conditioned only on events in its past light cone; the standard engine
uses the globally time-ordered state.
"""

__version__ = "0.1.0"

from .bell import BellConfig, ChshResult, build_bell_scenario, chsh, correlation, sweep  # noqa: E402
from .collapse import (  # noqa: E402
    DelayModel,
    KrausSet,
    perturbed_singlet,
    projective_qubit,
    sample_delay,
    singlet,
    softened_projectors,
    spacelike_probability,
)
from .engines import (  # noqa: E402
    OutcomeDistribution,
    ReductionEvent,
    Scenario,
    causal_distribution,
    event_probabilities,
    local_state,
    mixture_distribution,
    sample_run,
    standard_distribution,
)
from .errors import BudgetError, DimensionError, ParamError, ScenarioError, ZeroNormState  # noqa: E402
from .linalg import PureState, SiteOperator, apply_and_norm, embed, normalize  # noqa: E402
from .spacetime import CausalRelation, SpacetimePoint, interval_sq, past_cone_filter, relate  # noqa: E402
