"""Causal and standard reduction engines over a finite schedule of events.

Both engines walk the events in coordinate-time order (ties broken by site
index) and branch over every outcome. They differ only in the state an
event's probabilities are computed from:

* causal: the *local state*, obtained from the initial state by applying
  only the reductions in the event's past light cone, in time order;
* standard: the global state, obtained by applying every earlier reduction.

Reductions happen only at scheduled events, so this forward pass over the
schedule is exact; no spacetime mesh is needed.

Outcomes whose probability is at most ``EPS_ZERO`` are treated as
impossible. A branch whose local state is annihilated (possible only in the
causal engine) stops there, and its weight is reported as
``truncated_mass`` instead of being renormalized away.
"""

from __future__ import annotations

import math
import os
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .collapse import KrausSet
from .errors import BudgetError, DimensionError, ParamError, ZeroNormState
from .linalg import EPS_ZERO, TOL_NORM, PureState, apply_site, normalize, validate_dims
from .spacetime import CausalRelation, SpacetimePoint, past_cone_filter, relate

CAUSAL = "causal"
STANDARD = "standard"
ENGINES = (CAUSAL, STANDARD)
MAX_TUPLES = 10**6


@dataclass(frozen=True, eq=False)
class ReductionEvent:
    id: str
    site: int
    point: SpacetimePoint
    kraus: KrausSet

    @property
    def n_outcomes(self) -> int:
        return len(self.kraus)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Initial state (pure, or a weighted mixture) plus a schedule of reductions.

    ``initial`` is either a PureState or a sequence of ``(weight, PureState)``
    pairs. Outcome tuples are reported in the order of ``events``.
    """

    dims: tuple
    events: tuple
    initial: object
    site_positions: tuple = ()

    def __post_init__(self):
        dims = validate_dims(self.dims)
        object.__setattr__(self, "dims", dims)
        if isinstance(self.initial, PureState):
            components = ((1.0, self.initial),)
        else:
            components = tuple((float(w), s) for w, s in self.initial)
            if not components:
                raise ParamError("a mixture needs at least one component")
            weights = [w for w, _ in components]
            if any(not (math.isfinite(w) and w >= 0) for w in weights):
                raise ParamError("mixture weights must be finite and >= 0")
            if abs(sum(weights) - 1.0) > TOL_NORM:
                raise ParamError(f"mixture weights sum to {sum(weights)!r}, expected 1")
        for _, state in components:
            if not isinstance(state, PureState) or state.dims != dims:
                raise DimensionError("initial state does not match scenario dims")
        object.__setattr__(self, "_components", components)

        if self.site_positions and len(self.site_positions) != len(dims):
            raise DimensionError(f"{len(self.site_positions)} site positions for {len(dims)} sites")
        events = tuple(self.events)
        object.__setattr__(self, "events", events)
        seen_ids, seen_site_time, seen_point = set(), set(), {}
        for e in events:
            if not 0 <= e.site < len(dims):
                raise DimensionError(f"event {e.id!r}: site {e.site} out of range")
            if e.kraus.dim != dims[e.site]:
                raise DimensionError(f"event {e.id!r}: operators are {e.kraus.dim}-dim, site has {dims[e.site]}")
            if e.id in seen_ids:
                raise ParamError(f"duplicate event id {e.id!r}")
            seen_ids.add(e.id)
            if (e.site, e.point.t) in seen_site_time:
                raise ParamError(f"event {e.id!r}: two events at site {e.site} share time {e.point.t}")
            seen_site_time.add((e.site, e.point.t))
            other = seen_point.setdefault(e.point, e.site)
            if other != e.site:
                raise ParamError(f"event {e.id!r}: sites {other} and {e.site} share the point {e.point}")

    @property
    def components(self) -> tuple:
        return self._components

    @property
    def is_pure(self) -> bool:
        return len(self._components) == 1

    @property
    def pure_initial(self) -> PureState:
        if not self.is_pure:
            raise ParamError("scenario starts from a mixture; pick a component")
        return self._components[0][1]

    @property
    def ordered_events(self) -> list:
        return sorted(self.events, key=lambda e: (e.point.t, e.site))

    def event(self, event_id) -> ReductionEvent:
        for e in self.events:
            if e.id == event_id:
                return e
        raise KeyError(event_id)

    def with_initial(self, initial) -> "Scenario":
        return Scenario(self.dims, self.events, initial, self.site_positions)

    def with_events(self, events) -> "Scenario":
        return Scenario(self.dims, tuple(events), self.initial, self.site_positions)

    def n_tuples(self) -> int:
        return math.prod(e.n_outcomes for e in self.events)


@dataclass
class OutcomeDistribution:
    """Probabilities of full outcome tuples, ordered like ``event_ids``.

    Tuples absent from ``probs`` have probability zero. When branches were
    cut by an annihilated local state, their total weight is in
    ``truncated_mass`` and the probabilities sum to ``1 - truncated_mass``.
    """

    event_ids: tuple
    probs: dict
    truncated_mass: float = 0.0
    zero_norm_chains: list = field(default_factory=list)
    engine: str = CAUSAL

    def prob(self, outcome) -> float:
        return self.probs.get(tuple(outcome), 0.0)

    def total(self) -> float:
        return math.fsum(self.probs.values())

    @property
    def is_partial(self) -> bool:
        return self.truncated_mass > 0.0

    def marginal(self, event_id) -> dict:
        k = self.event_ids.index(event_id)
        out = {}
        for outcome, p in sorted(self.probs.items()):
            out[outcome[k]] = out.get(outcome[k], 0.0) + p
        return out

    def items(self):
        return sorted(self.probs.items())


def apply_reductions(initial: PureState, steps, events_by_id: Mapping) -> PureState:
    """Apply ``steps`` = [(event_id, outcome), ...] in order, normalizing each time."""
    state = initial
    for k, (eid, outcome) in enumerate(steps):
        e = events_by_id[eid]
        vec = apply_site(e.kraus.ops[outcome], e.site, state.dims, state.amplitudes)
        state = normalize(vec, float(np.vdot(vec, vec).real), state.dims, chain=steps[:k + 1])
    return state


def _cone_steps(scenario: Scenario, point: SpacetimePoint, past: Mapping) -> tuple:
    steps = []
    for e in past_cone_filter(point, scenario.events):
        if e.id not in past:
            raise ParamError(f"past data lacks an outcome for event {e.id!r} in the past cone")
        outcome = past[e.id]
        if not 0 <= outcome < e.n_outcomes:
            raise ParamError(f"event {e.id!r} has no outcome {outcome!r}")
        steps.append((e.id, outcome))
    return tuple(steps)


def local_state(scenario: Scenario, target: SpacetimePoint, past: Mapping, initial: PureState | None = None) -> PureState:
    """State at ``target`` given outcomes of the reductions in its past cone.

    ``past`` maps event ids to outcome indices; entries for events outside
    the cone are ignored.
    """
    initial = initial or scenario.pure_initial
    steps = _cone_steps(scenario, target, past)
    return apply_reductions(initial, steps, {e.id: e for e in scenario.events})


def probabilities_from_state(event: ReductionEvent, state: PureState) -> np.ndarray:
    probs = np.empty(event.n_outcomes)
    for j, op in enumerate(event.kraus.ops):
        vec = apply_site(op, event.site, state.dims, state.amplitudes)
        probs[j] = np.vdot(vec, vec).real
    return probs


def event_probabilities(scenario: Scenario, event: ReductionEvent, past: Mapping,
                        initial: PureState | None = None) -> np.ndarray:
    """Causal-engine outcome probabilities of ``event`` given its past-cone data."""
    return probabilities_from_state(event, local_state(scenario, event.point, past, initial))


def standard_event_probabilities(scenario: Scenario, event: ReductionEvent, past: Mapping,
                                 initial: PureState | None = None) -> np.ndarray:
    """Standard-engine probabilities: condition on every event processed before ``event``."""
    initial = initial or scenario.pure_initial
    order = scenario.ordered_events
    earlier = order[:order.index(event)]
    steps = tuple((e.id, past[e.id]) for e in earlier)
    state = apply_reductions(initial, steps, {e.id: e for e in scenario.events})
    return probabilities_from_state(event, state)


class _Runner:
    """Memoized forward pass for one pure initial state and one engine."""

    def __init__(self, scenario: Scenario, initial: PureState, engine: str):
        if engine not in ENGINES:
            raise ParamError(f"unknown engine {engine!r}")
        self.scenario = scenario
        self.initial = initial
        self.engine = engine
        self.order = scenario.ordered_events
        self.by_id = {e.id: e for e in scenario.events}
        self.position = {e.id: k for k, e in enumerate(scenario.events)}
        if engine == CAUSAL:
            self.conditioning = {
                e.id: [c.id for c in past_cone_filter(e.point, scenario.events)] for e in self.order
            }
        else:
            self.conditioning = {e.id: [c.id for c in self.order[:k]] for k, e in enumerate(self.order)}
        self._states = {(): initial}
        self._probs = {}

    def state(self, steps: tuple) -> PureState:
        hit = self._states.get(steps)
        if hit is None:
            parent = self.state(steps[:-1])
            eid, outcome = steps[-1]
            e = self.by_id[eid]
            vec = apply_site(e.kraus.ops[outcome], e.site, parent.dims, parent.amplitudes)
            try:
                hit = normalize(vec, float(np.vdot(vec, vec).real), parent.dims, chain=steps)
            except ZeroNormState as exc:
                hit = exc
            self._states[steps] = hit
        if isinstance(hit, ZeroNormState):
            raise hit
        return hit

    def probabilities(self, event: ReductionEvent, assignment: Mapping) -> np.ndarray:
        steps = tuple((eid, assignment[eid]) for eid in self.conditioning[event.id])
        key = (event.id, steps)
        probs = self._probs.get(key)
        if probs is None:
            probs = probabilities_from_state(event, self.state(steps))
            self._probs[key] = probs
        return probs

    def enumerate(self) -> OutcomeDistribution:
        probs, truncated, chains = {}, [], []
        n = len(self.order)

        def branch(k, weight, assignment):
            if k == n:
                key = tuple(assignment[e.id] for e in self.scenario.events)
                probs[key] = probs.get(key, 0.0) + weight
                return
            event = self.order[k]
            try:
                p = self.probabilities(event, assignment)
            except ZeroNormState as exc:
                truncated.append(weight)
                if len(chains) < 16:
                    chains.append(exc.chain)
                return
            for j in range(event.n_outcomes):
                if p[j] > EPS_ZERO:
                    assignment[event.id] = j
                    branch(k + 1, weight * float(p[j]), assignment)
            assignment.pop(event.id, None)

        branch(0, 1.0, {})
        return OutcomeDistribution(
            tuple(e.id for e in self.scenario.events), probs,
            truncated_mass=math.fsum(truncated), zero_norm_chains=chains, engine=self.engine,
        )

    def draw(self, rng: np.random.Generator) -> tuple:
        assignment = {}
        for event in self.order:
            p = self.probabilities(event, assignment)
            p = np.where(p > EPS_ZERO, p, 0.0)
            cdf = np.cumsum(p)
            j = int(np.searchsorted(cdf, rng.random() * cdf[-1], side="right"))
            assignment[event.id] = min(j, event.n_outcomes - 1)
        return tuple(assignment[e.id] for e in self.scenario.events)


def _check_budget(scenario: Scenario) -> None:
    n = scenario.n_tuples()
    if n > MAX_TUPLES:
        raise BudgetError(f"{n} outcome tuples exceed the enumeration budget of {MAX_TUPLES}; sample instead")


def mixture_distribution(scenario: Scenario, engine: str) -> OutcomeDistribution:
    """Weight-averaged distribution over the initial-state components."""
    _check_budget(scenario)
    probs, truncated, chains = {}, 0.0, []
    for weight, state in scenario.components:
        part = _Runner(scenario, state, engine).enumerate()
        for key, p in part.items():
            probs[key] = probs.get(key, 0.0) + weight * p
        truncated += weight * part.truncated_mass
        chains.extend(part.zero_norm_chains)
    return OutcomeDistribution(tuple(e.id for e in scenario.events), probs, truncated, chains, engine)


def causal_distribution(scenario: Scenario) -> OutcomeDistribution:
    return mixture_distribution(scenario, CAUSAL)


def standard_distribution(scenario: Scenario) -> OutcomeDistribution:
    return mixture_distribution(scenario, STANDARD)


def distribution(scenario: Scenario, engine: str) -> OutcomeDistribution:
    return mixture_distribution(scenario, engine)


def _pick_component(scenario: Scenario, rng: np.random.Generator) -> PureState:
    if scenario.is_pure:
        return scenario.pure_initial
    weights = np.array([w for w, _ in scenario.components])
    k = int(np.searchsorted(np.cumsum(weights), rng.random() * weights.sum(), side="right"))
    return scenario.components[min(k, len(weights) - 1)][1]


def sample_run(scenario: Scenario, engine: str, seed) -> tuple:
    """Draw one outcome tuple. Raises ZeroNormState if the run reaches an annihilated state."""
    rng = np.random.default_rng(seed)
    state = _pick_component(scenario, rng)
    return _Runner(scenario, state, engine).draw(rng)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    return np.random.default_rng([seed, trial])


def _sample_chunk(scenario: Scenario, engine: str, seed: int, start: int, stop: int) -> Counter:
    runners = {}
    counts = Counter()
    for trial in range(start, stop):
        rng = trial_rng(seed, trial)
        state = _pick_component(scenario, rng)
        runner = runners.get(id(state))
        if runner is None:
            runner = runners[id(state)] = _Runner(scenario, state, engine)
        counts[runner.draw(rng)] += 1
    return counts


def resolve_threads(threads: int) -> int:
    if threads < 0:
        raise ParamError("threads must be >= 0")
    return threads or os.cpu_count() or 1


def sample_counts(scenario: Scenario, engine: str, trials: int, seed: int = 0, threads: int = 1) -> Counter:
    """Counts of outcome tuples over ``trials`` independent runs.

    Trial ``i`` uses a stream seeded by ``(seed, i)``, so the result does not
    depend on ``threads``.
    """
    if trials <= 0:
        raise ParamError("trials must be positive")
    workers = min(resolve_threads(threads), trials)
    if workers == 1:
        return _sample_chunk(scenario, engine, seed, 0, trials)
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    with ProcessPoolExecutor(max_workers=workers) as pool:
        futures = [pool.submit(_sample_chunk, scenario, engine, seed, int(a), int(b))
                   for a, b in zip(bounds[:-1], bounds[1:])]
        total = Counter()
        for fut in futures:
            total.update(fut.result())
    return total


def is_causal_chain(events: Sequence[ReductionEvent]) -> bool:
    """True when every pair of events is causally ordered (no spacelike pairs)."""
    return all(
        relate(a.point, b.point) in (CausalRelation.PAST, CausalRelation.FUTURE)
        for i, a in enumerate(events) for b in events[i + 1:]
    )
