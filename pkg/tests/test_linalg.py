import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalqt.collapse import projective_qubit, random_kraus_set, singlet
from causalqt.errors import DimensionError, ZeroNormState
from causalqt.linalg import (
    EPS_ZERO,
    PureState,
    SiteOperator,
    apply_and_norm,
    embed,
    normalize,
    validate_dims,
)

from randomized import kron_site, random_state

P0 = np.diag([1.0, 0.0])


def test_embed_identity_is_noop():
    rng = np.random.default_rng(0)
    psi = random_state((2, 3, 2), rng)
    out = embed(SiteOperator(1, np.eye(3)), psi.dims).apply(psi.amplitudes)
    assert np.array_equal(out, psi.amplitudes)


def test_embed_projector_on_singlet():
    out = embed(SiteOperator(0, P0), (2, 2)) @ singlet().amplitudes
    expected = np.zeros(4)
    expected[0b01] = 1 / np.sqrt(2)
    assert np.allclose(out, expected, atol=1e-15)


def test_embed_matches_kronecker_on_mixed_dims():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
    psi = random_state((2, 3), rng)
    implicit = embed(SiteOperator(1, a), (2, 3)).apply(psi.amplitudes)
    explicit = np.kron(np.eye(2), a) @ psi.amplitudes
    assert np.allclose(implicit, explicit, atol=1e-12)


def test_toarray_is_explicit_kronecker():
    a = np.arange(9.0).reshape(3, 3)
    op = embed(SiteOperator(1, a), (2, 3, 2))
    assert np.array_equal(op.toarray(), kron_site(a, 1, (2, 3, 2)))


def test_embed_rejects_mismatched_dims():
    with pytest.raises(DimensionError):
        embed(SiteOperator(0, np.eye(3)), (2, 2))
    with pytest.raises(DimensionError):
        embed(SiteOperator(2, np.eye(2)), (2, 2))


def test_apply_and_norm_identity():
    psi = singlet()
    vec, n2 = apply_and_norm(SiteOperator(1, np.eye(2)), psi)
    assert np.array_equal(vec, psi.amplitudes)
    assert n2 == pytest.approx(1.0, abs=1e-15)


def test_apply_and_norm_projector_on_singlet():
    # Tr(P0 x I |s><s|) computed by hand: half the weight sits on |01>
    _, n2 = apply_and_norm(SiteOperator(0, P0), singlet())
    assert n2 == pytest.approx(0.5, abs=1e-15)


def test_double_projection_of_singlet_has_zero_norm():
    vec, _ = apply_and_norm(SiteOperator(0, P0), singlet())
    state = PureState(vec / np.linalg.norm(vec), (2, 2))
    _, n2 = apply_and_norm(SiteOperator(1, P0), state)
    assert n2 == 0.0


def test_normalize_rescales():
    psi = singlet()
    assert np.allclose(normalize(2 * psi.amplitudes, 4.0, (2, 2)).amplitudes, psi.amplitudes)


def test_normalize_reduced_singlet():
    vec, n2 = apply_and_norm(SiteOperator(0, P0), singlet())
    assert np.allclose(normalize(vec, n2, (2, 2)).amplitudes, PureState.basis((0, 1), (2, 2)).amplitudes)


def test_normalize_zero_raises_with_chain():
    with pytest.raises(ZeroNormState) as info:
        normalize(np.zeros(4), 0.0, (2, 2), chain=(("A", 0), ("B", 0)))
    assert info.value.chain == (("A", 0), ("B", 0))
    with pytest.raises(ZeroNormState):
        normalize(np.zeros(4), EPS_ZERO, (2, 2))


def test_pure_state_validation():
    with pytest.raises(DimensionError):
        PureState(np.ones(4), (2, 2))
    with pytest.raises(DimensionError):
        PureState(np.array([1.0, 0, 0]), (2, 2))
    with pytest.raises(DimensionError):
        validate_dims((1, 2))
    with pytest.raises(DimensionError):
        validate_dims((2,) * 17)
    psi = singlet()
    with pytest.raises(ValueError):
        psi.amplitudes[0] = 1.0


def test_completeness_transfers_to_probabilities():
    rng = np.random.default_rng(5)
    for _ in range(20):
        dims = (2, 3, 4)
        psi = random_state(dims, rng)
        site = int(rng.integers(3))
        kraus = random_kraus_set(dims[site], 3, rng)
        total = sum(apply_and_norm(op, psi)[1] for op in kraus.on_site(site))
        assert total == pytest.approx(1.0, abs=1e-9)


dims_strategy = st.lists(st.integers(2, 4), min_size=2, max_size=3).map(tuple)


@settings(max_examples=60, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1))
def test_implicit_equals_explicit(dims, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(dims, rng)
    site = int(rng.integers(len(dims)))
    a = rng.normal(size=(dims[site],) * 2) + 1j * rng.normal(size=(dims[site],) * 2)
    implicit = embed(SiteOperator(site, a), dims).apply(psi.amplitudes)
    assert np.allclose(implicit, kron_site(a, site, dims) @ psi.amplitudes, atol=1e-12, rtol=0)


@settings(max_examples=60, deadline=None)
@given(dims=dims_strategy, seed=st.integers(0, 2**32 - 1))
def test_different_sites_commute(dims, seed):
    rng = np.random.default_rng(seed)
    psi = random_state(dims, rng).amplitudes
    i, j = rng.choice(len(dims), size=2, replace=False)
    a = rng.normal(size=(dims[i],) * 2) + 1j * rng.normal(size=(dims[i],) * 2)
    b = rng.normal(size=(dims[j],) * 2) + 1j * rng.normal(size=(dims[j],) * 2)
    ea, eb = embed(SiteOperator(int(i), a), dims), embed(SiteOperator(int(j), b), dims)
    assert np.allclose(ea @ (eb @ psi), eb @ (ea @ psi), atol=1e-12, rtol=0)


def test_projective_kraus_on_site_embeds():
    ops = projective_qubit(0.0).on_site(1)
    vec, n2 = apply_and_norm(ops[1], singlet())
    assert n2 == pytest.approx(0.5)
    assert np.allclose(vec, [0, 1 / np.sqrt(2), 0, 0])
