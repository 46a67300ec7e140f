import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from bell_state import BellDiagonal, DomainError, Robustness, from_robustness, from_werner
from swap import (
    ChainConvention,
    bell_transfer_matrix,
    chain_exponent,
    chain_robustness,
    chain_werner_fidelity,
    swap_chain,
    swap_links,
    swap_pair,
    swap_qnd,
)

weights = st.lists(st.floats(min_value=0.0, max_value=1.0), min_size=4, max_size=4).filter(lambda w: sum(w) > 1e-3)


def _state(w):
    total = math.fsum(w)
    return BellDiagonal(*(v / total for v in w))


def _close(a, b, tol=1e-12):
    return np.max(np.abs(a.as_array() - b.as_array())) < tol


# ============================================================================
# Convention
# ============================================================================

def test_chain_exponent_conventions():
    assert chain_exponent(3, "paper") == 3
    assert chain_exponent(3, ChainConvention.STRICT_CHAIN_L_PLUS_1) == 4
    assert chain_exponent(0, "strict") == 1


def test_chain_exponent_rejects_bad_counts():
    with pytest.raises(DomainError):
        chain_exponent(0, "paper")
    with pytest.raises(DomainError):
        chain_exponent(-1, "strict")
    with pytest.raises(DomainError):
        chain_exponent(2.5, "paper")
    with pytest.raises(DomainError):
        ChainConvention.parse("sideways")


# ============================================================================
# swap_pair
# ============================================================================

def test_perfect_pairs_swap_to_perfect_pair():
    assert swap_pair(BellDiagonal.perfect(), BellDiagonal.perfect()).as_tuple() == (1.0, 0.0, 0.0, 0.0)


@given(weights)
def test_perfect_pair_is_identity(w):
    b = _state(w)
    assert _close(swap_pair(BellDiagonal.perfect(), b), b)


def test_qnd_pairs_example():
    out = swap_pair(from_robustness(0.9), from_robustness(0.9))
    assert out.b1 == pytest.approx(0.905, abs=1e-14)
    assert out.is_qnd()


@given(weights, weights)
def test_swap_pair_is_commutative(wa, wb):
    a, b = _state(wa), _state(wb)
    assert _close(swap_pair(a, b), swap_pair(b, a))


@given(weights, weights, weights)
def test_swap_pair_is_associative(wa, wb, wc):
    a, b, c = _state(wa), _state(wb), _state(wc)
    assert _close(swap_pair(swap_pair(a, b), c), swap_pair(a, swap_pair(b, c)))


@given(weights, weights)
def test_swap_pair_composes_pauli_labels(wa, wb):
    a, b = _state(wa), _state(wb)
    # labels I, Z, X, XZ as bits 0..3: composing errors XORs them
    expected = np.zeros(4)
    for i, ai in enumerate(a):
        for j, bj in enumerate(b):
            expected[i ^ j] += ai * bj
    assert np.allclose(swap_pair(a, b).as_array(), expected, atol=1e-12)
    assert np.allclose(bell_transfer_matrix(a) @ b.as_array(), expected, atol=1e-12)


@given(st.floats(min_value=0.0, max_value=1.0), st.floats(min_value=0.0, max_value=1.0))
def test_families_are_closed(p, q):
    assert swap_pair(from_werner(p), from_werner(q)).is_werner()
    assert swap_pair(from_robustness(p * 0.999), from_robustness(q * 0.999)).is_qnd()


# ============================================================================
# Closed forms
# ============================================================================

def test_swap_qnd_examples():
    assert swap_qnd(Robustness(1.0), 0.7).r_param == 0.7
    assert swap_qnd(0.0, 0.7).r_param == 0.0
    assert swap_qnd(0.97, 0.97).r_param == pytest.approx(0.9409, abs=1e-15)
    assert swap_pair(from_robustness(0.97), from_robustness(0.97)).b1 == pytest.approx((1 + 0.9409) / 2, abs=1e-14)


def test_chain_robustness_examples():
    assert chain_robustness(0.97, 10).r_param == pytest.approx(0.73742, abs=1e-5)
    assert chain_robustness(0.61, 1, "paper").r_param == 0.61
    assert chain_robustness(0.985, 2, "strict").r_param == pytest.approx(0.985 ** 3, abs=1e-15)


def test_chain_werner_fidelity_examples():
    assert chain_werner_fidelity(1.0, 17) == 1.0
    assert chain_werner_fidelity(0.9625, 5) == pytest.approx(0.83033, abs=1e-5)
    assert chain_werner_fidelity(0.9925, 1) == 0.9925


def test_chain_werner_fidelity_rejects_low_fidelity():
    with pytest.raises(DomainError):
        chain_werner_fidelity(0.2, 3)


@pytest.mark.parametrize("conv", ["paper", "strict"])
def test_swap_chain_matches_closed_forms(conv):
    werner = from_werner(0.95)
    qnd = from_robustness(0.925)
    for L in range(1, 51):
        folded = swap_chain(werner, L, conv)
        assert folded.b1 == pytest.approx(chain_werner_fidelity(werner.b1, L, conv), abs=1e-12)
        assert folded.is_werner(tol=1e-12)

        folded = swap_chain(qnd, L, conv)
        assert folded.b1 == pytest.approx(chain_robustness(0.925, L, conv).fidelity, abs=1e-12)


def test_swap_chain_examples():
    out = swap_chain(from_werner(0.95), 5)
    assert out.b1 == pytest.approx(0.83033, abs=1e-5)
    assert swap_chain(from_robustness(0.925), 3).b1 == pytest.approx((1 + 0.925 ** 3) / 2, abs=1e-12)
    mixed = swap_chain(BellDiagonal.maximally_mixed(), 7)
    assert _close(mixed, BellDiagonal.maximally_mixed())


def test_default_chain_equals_werner_power():
    for L in (1, 2, 9, 30):
        assert _close(swap_chain(from_werner(0.9), L), from_werner(0.9 ** L))


def test_werner_fidelity_decreases_along_chain():
    fidelities = [swap_chain(from_werner(0.98), L).b1 for L in range(1, 40)]
    assert all(b < a for a, b in zip(fidelities, fidelities[1:]))


def test_swap_links_heterogeneous_chain():
    links = [from_robustness(0.9), from_robustness(0.8), from_robustness(0.7)]
    assert swap_links(links).b1 == pytest.approx((1 + 0.9 * 0.8 * 0.7) / 2, abs=1e-14)
    with pytest.raises(DomainError):
        swap_links([])
