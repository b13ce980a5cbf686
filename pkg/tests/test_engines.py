import math

import numpy as np
import pytest

from causalqt.collapse import KrausSet, perturbed_singlet, projective_qubit, random_kraus_set, singlet
from causalqt.engines import (
    ReductionEvent,
    Scenario,
    apply_reductions,
    causal_distribution,
    event_probabilities,
    is_causal_chain,
    local_state,
    mixture_distribution,
    sample_counts,
    sample_run,
    standard_distribution,
    standard_event_probabilities,
)
from causalqt.errors import BudgetError, DimensionError, ParamError, ZeroNormState
from causalqt.linalg import PureState
from causalqt.spacetime import SpacetimePoint, past_cone_filter

from randomized import brute_force_chain_distribution, random_chain, random_mixed_scenario, random_state

P = SpacetimePoint.on_line
Z = projective_qubit(0.0)
L = 3e-5


def bell_pair(initial, t_b=0.0, kraus_a=Z, kraus_b=Z):
    events = (ReductionEvent("A", 0, P(0.0, 0.0), kraus_a), ReductionEvent("B", 1, P(L, t_b), kraus_b))
    return Scenario((2, 2), events, initial)


# -- local_state / event_probabilities ------------------------------------


def test_local_state_empty_past_is_initial():
    sc = bell_pair(singlet())
    assert local_state(sc, P(0.0, 0.0), {}) is sc.pure_initial


def test_local_state_after_one_wing():
    sc = bell_pair(singlet())
    state = local_state(sc, P(0.0, 1e-5), {"A": 0})
    assert np.allclose(state.amplitudes, PureState.basis((0, 1), (2, 2)).amplitudes)


def test_local_state_both_wings_zero_norm():
    sc = bell_pair(singlet())
    with pytest.raises(ZeroNormState) as info:
        local_state(sc, P(0.0, 1.0), {"A": 0, "B": 0})
    assert info.value.chain == (("A", 0), ("B", 0))


def test_local_state_requires_cone_outcomes():
    sc = bell_pair(singlet())
    with pytest.raises(ParamError):
        local_state(sc, P(0.0, 1.0), {"A": 0})
    with pytest.raises(ParamError):
        local_state(sc, P(0.0, 1.0), {"A": 0, "B": 7})


def test_event_probabilities_singlet_half_half():
    sc = bell_pair(singlet())
    assert np.allclose(event_probabilities(sc, sc.event("A"), {}), [0.5, 0.5], atol=1e-15)


def test_event_probabilities_timelike_after_collapse():
    sc = bell_pair(singlet(), t_b=1e-4)
    assert np.allclose(event_probabilities(sc, sc.event("B"), {"A": 0}), [0.0, 1.0], atol=1e-15)


def test_event_probabilities_spacelike_ignores_other_wing():
    sc = bell_pair(singlet(), t_b=0.0)
    assert np.allclose(event_probabilities(sc, sc.event("B"), {"A": 0}), [0.5, 0.5], atol=1e-15)


# -- distributions -----------------------------------------------------------


def test_causal_spacelike_quarter_each():
    dist = causal_distribution(bell_pair(perturbed_singlet(1e-3)))
    for outcome in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert abs(dist.prob(outcome) - 0.25) <= 2e-6


def test_causal_timelike_matches_standard_pattern():
    dist = causal_distribution(bell_pair(perturbed_singlet(1e-3), t_b=1e-4))
    assert abs(dist.prob((0, 1)) - 0.5) <= 2e-6 and abs(dist.prob((1, 0)) - 0.5) <= 2e-6
    assert dist.prob((0, 0)) == pytest.approx(1e-6, rel=1e-9)
    assert dist.prob((1, 1)) == pytest.approx(1e-6, rel=1e-9)


def test_single_event_distribution_equals_event_probabilities():
    sc = Scenario((2, 2), (ReductionEvent("A", 0, P(0, 0), projective_qubit(0.7)),), perturbed_singlet(0.1))
    dist = causal_distribution(sc)
    probs = event_probabilities(sc, sc.event("A"), {})
    assert dist.prob((0,)) == probs[0] and dist.prob((1,)) == probs[1]


def test_standard_spacelike_follows_singlet():
    eps = 1e-3
    dist = standard_distribution(bell_pair(perturbed_singlet(eps)))
    assert dist.prob((0, 0)) == pytest.approx(eps**2, rel=1e-9)
    assert dist.prob((1, 1)) == pytest.approx(eps**2, rel=1e-9)
    assert dist.prob((0, 1)) == pytest.approx(0.5 - eps**2, rel=1e-12)


def test_standard_exact_singlet():
    dist = standard_distribution(bell_pair(singlet()))
    assert dist.prob((0, 0)) == 0.0 and dist.prob((1, 1)) == 0.0
    assert dist.prob((0, 1)) == pytest.approx(0.5, abs=1e-15)
    assert dist.prob((1, 0)) == pytest.approx(0.5, abs=1e-15)
    assert dist.truncated_mass == 0.0


def test_chain_equivalence_against_brute_force():
    rng = np.random.default_rng(2024)
    for _ in range(40):
        sc = random_chain(rng)
        assert is_causal_chain(sc.events)
        brute = brute_force_chain_distribution(sc)
        causal, standard = causal_distribution(sc), standard_distribution(sc)
        for outcome, p in brute.items():
            assert abs(causal.prob(outcome) - p) < 1e-9
            assert abs(standard.prob(outcome) - p) < 1e-9


def test_zero_norm_branches_are_truncated_not_renormalized():
    late = ReductionEvent("A2", 0, P(0.0, 1e-4), Z)
    sc = bell_pair(singlet()).with_events(bell_pair(singlet()).events + (late,))
    dist = causal_distribution(sc)
    assert dist.truncated_mass == pytest.approx(0.5, abs=1e-12)
    assert dist.total() == pytest.approx(0.5, abs=1e-12)
    assert sorted(dist.zero_norm_chains) == [(("A", 0), ("B", 0)), (("A", 1), ("B", 1))]


def test_budget_error():
    k = KrausSet(tuple(np.eye(2)[[i]].T @ np.eye(2)[[i]] for i in range(2)))
    events = tuple(ReductionEvent(f"e{i}", 0, P(0.0, float(i)), k) for i in range(21))
    sc = Scenario((2, 2), events, singlet())
    with pytest.raises(BudgetError):
        causal_distribution(sc)


def test_scenario_validation():
    with pytest.raises(DimensionError):
        Scenario((2, 2), (ReductionEvent("A", 2, P(0, 0), Z),), singlet())
    with pytest.raises(DimensionError):
        Scenario((2, 3), (ReductionEvent("A", 1, P(0, 0), Z),), random_state((2, 3), np.random.default_rng(0)))
    with pytest.raises(ParamError):
        Scenario((2, 2), (ReductionEvent("A", 0, P(0, 0), Z), ReductionEvent("A", 1, P(1, 0), Z)), singlet())
    with pytest.raises(ParamError):
        Scenario((2, 2), (ReductionEvent("A", 0, P(0, 0), Z), ReductionEvent("B", 0, P(0, 0), Z)), singlet())
    with pytest.raises(ParamError):
        Scenario((2, 2), (ReductionEvent("A", 0, P(0, 0), Z), ReductionEvent("B", 1, P(0, 0), Z)), singlet())
    with pytest.raises(ParamError):
        Scenario((2, 2), (), [(0.5, singlet()), (0.4, singlet())])


# -- sampling ------------------------------------------------------------------


def test_sample_single_deterministic_event():
    sc = Scenario((2, 2), (ReductionEvent("A", 0, P(0, 0), KrausSet((np.eye(2),))),), singlet())
    assert sample_run(sc, "causal", 3) == (0,)


def test_sample_is_reproducible():
    sc = bell_pair(perturbed_singlet(1e-3))
    runs = [sample_run(sc, "causal", seed) for seed in range(20)]
    assert runs == [sample_run(sc, "causal", seed) for seed in range(20)]
    assert sample_counts(sc, "causal", 500, seed=4) == sample_counts(sc, "causal", 500, seed=4)


def test_causal_samples_match_quarter():
    n = 100_000
    counts = sample_counts(bell_pair(perturbed_singlet(1e-3)), "causal", n, seed=12)
    sigma = math.sqrt(0.25 * 0.75 / n)
    for outcome in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert abs(counts[outcome] / n - 0.25) < 3 * sigma


def test_sample_counts_independent_of_threads():
    sc = bell_pair(perturbed_singlet(1e-3), t_b=1e-4)
    assert sample_counts(sc, "standard", 400, seed=9, threads=1) == sample_counts(sc, "standard", 400, seed=9, threads=2)


def test_sampling_aborts_on_zero_norm():
    late = ReductionEvent("A2", 0, P(0.0, 1e-4), Z)
    sc = bell_pair(singlet()).with_events(bell_pair(singlet()).events + (late,))
    with pytest.raises(ZeroNormState):
        sample_counts(sc, "causal", 200, seed=0)


# -- mixtures ------------------------------------------------------------------


def test_single_component_mixture_equals_pure():
    pure = bell_pair(perturbed_singlet(1e-3), t_b=1e-4)
    mixed = pure.with_initial([(1.0, perturbed_singlet(1e-3))])
    for engine in ("causal", "standard"):
        assert mixture_distribution(mixed, engine).probs == mixture_distribution(pure, engine).probs


def test_classical_mixture_of_product_states():
    comps = [(0.5, PureState.basis((0, 1), (2, 2))), (0.5, PureState.basis((1, 0), (2, 2)))]
    sc = bell_pair(singlet()).with_initial(comps)
    for engine in ("causal", "standard"):
        dist = mixture_distribution(sc, engine)
        assert [dist.prob(o) for o in [(0, 0), (0, 1), (1, 0), (1, 1)]] == pytest.approx([0, 0.5, 0.5, 0], abs=1e-15)


def test_eps_mixture_spacelike_quarter():
    sc = bell_pair(singlet()).with_initial([(0.5, perturbed_singlet(1e-3)), (0.5, perturbed_singlet(2e-3))])
    dist = causal_distribution(sc)
    for outcome in [(0, 0), (0, 1), (1, 0), (1, 1)]:
        assert abs(dist.prob(outcome) - 0.25) <= 2e-6


def test_mixture_sampling_uses_component_weights():
    comps = [(0.25, PureState.basis((0, 1), (2, 2))), (0.75, PureState.basis((1, 0), (2, 2)))]
    sc = bell_pair(singlet()).with_initial(comps)
    counts = sample_counts(sc, "causal", 20_000, seed=1)
    assert set(counts) == {(0, 1), (1, 0)}
    assert abs(counts[(0, 1)] / 20_000 - 0.25) < 3 * math.sqrt(0.25 * 0.75 / 20_000)


# -- structural properties ------------------------------------------------------


def _three_site_fan(rng):
    """C at the origin lies in the past of both A and B, which are mutually spacelike."""
    dims = tuple(int(d) for d in rng.integers(2, 4, size=3))
    events = (
        ReductionEvent("C", 2, SpacetimePoint((0, 0, 0), 0.0), random_kraus_set(dims[2], 2, rng)),
        ReductionEvent("A", 0, SpacetimePoint((-1, 0, 0), 2.0), random_kraus_set(dims[0], 3, rng)),
        ReductionEvent("B", 1, SpacetimePoint((1, 0, 0), 2.0), random_kraus_set(dims[1], 2, rng)),
    )
    return Scenario(dims, events, random_state(dims, rng))


def test_factorization_given_shared_past():
    rng = np.random.default_rng(77)
    for _ in range(25):
        sc = _three_site_fan(rng)
        dist = causal_distribution(sc)
        for c in range(2):
            p_c = sum(p for (oc, _, _), p in dist.items() if oc == c)
            pa = event_probabilities(sc, sc.event("A"), {"C": c})
            pb = event_probabilities(sc, sc.event("B"), {"C": c})
            for a in range(3):
                for b in range(2):
                    assert abs(dist.prob((c, a, b)) / p_c - pa[a] * pb[b]) < 1e-12


def test_local_agreement_with_standard_on_past_cone():
    rng = np.random.default_rng(8)
    for _ in range(30):
        sc = random_mixed_scenario(rng)
        for event in sc.events:
            cone = past_cone_filter(event.point, sc.events)
            restricted = sc.with_events(cone + [event])
            std = standard_distribution(restricted)
            ids = std.event_ids
            k = ids.index(event.id)
            # one cone history with positive probability
            outcome, _ = max(std.items(), key=lambda kv: kv[1])
            past = {eid: o for eid, o in zip(ids, outcome) if eid != event.id}
            joint = [std.prob(outcome[:k] + (j,) + outcome[k + 1:]) for j in range(event.n_outcomes)]
            expected = np.array(joint) / sum(joint)
            got = event_probabilities(sc, event, past)
            assert np.allclose(got, expected, atol=1e-12, rtol=0)
            assert np.allclose(got, standard_event_probabilities(restricted, event, past), atol=1e-12, rtol=0)


def test_conditional_law_ignores_spacelike_outcomes():
    rng = np.random.default_rng(31)
    sc = _three_site_fan(rng)
    dist = causal_distribution(sc)
    for c in range(2):
        rows = []
        for b in range(2):
            w = [dist.prob((c, a, b)) for a in range(3)]
            rows.append(np.array(w) / sum(w))
        assert np.allclose(rows[0], rows[1], atol=1e-12, rtol=0)


def test_spacelike_application_order_is_irrelevant():
    rng = np.random.default_rng(4)
    for _ in range(50):
        sc = _three_site_fan(rng)
        by_id = {e.id: e for e in sc.events}
        a, b, c = int(rng.integers(3)), int(rng.integers(2)), int(rng.integers(2))
        s1 = apply_reductions(sc.pure_initial, (("C", c), ("A", a), ("B", b)), by_id)
        s2 = apply_reductions(sc.pure_initial, (("C", c), ("B", b), ("A", a)), by_id)
        assert np.allclose(s1.amplitudes, s2.amplitudes, atol=1e-12, rtol=0)


def test_distributions_are_normalized():
    rng = np.random.default_rng(99)
    for _ in range(40):
        sc = random_mixed_scenario(rng, n_events=int(rng.integers(1, 6)))
        for dist in (causal_distribution(sc), standard_distribution(sc)):
            assert abs(dist.total() + dist.truncated_mass - 1.0) < 1e-9
            assert all(0.0 <= p <= 1.0 + 1e-12 for p in dist.probs.values())
