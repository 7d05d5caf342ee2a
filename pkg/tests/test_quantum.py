import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ksrand import linalg
from ksrand.game import VALID_ROUNDS, context_for, winning_condition
from ksrand.linalg import DimensionError
from ksrand.observables import projector
from ksrand.quantum import (
    ConsistencyError,
    DensityState,
    InvalidStateError,
    ZeroProbabilityBranch,
    common_eigenstate,
    dephase,
    expectation_product,
    joint_distribution,
    maximally_mixed,
    moment_probability,
    post_measurement_state,
    random_state,
    sandwiched_probability,
    sequential_probability,
)


def test_maximally_mixed():
    assert np.array_equal(maximally_mixed(2).matrix, np.diag([0.25] * 4))
    assert np.array_equal(maximally_mixed(3).matrix, np.eye(8) / 8)
    assert linalg.trace(maximally_mixed(2).matrix) == 1
    for bad in (1, 4):
        with pytest.raises(ValueError):
            maximally_mixed(bad)


@pytest.mark.parametrize(
    "m",
    [
        np.diag([0.5, 0.5, 0.5, 0.5]),  # trace 2
        np.diag([1.2, -0.2, 0, 0]),  # negative eigenvalue
        np.array([[0.5, 0.5], [0, 0.5]]),  # not Hermitian
    ],
)
def test_invalid_states_rejected(m):
    with pytest.raises(InvalidStateError):
        DensityState(m)


def test_sequential_probability_examples(square):
    mm = maximally_mixed(2)
    A1, B1, C1 = square["A1"], square["B1"], square["C1"]
    assert sequential_probability(mm, [(A1, 0), (B1, 0), (C1, 0)]) == pytest.approx(0.25, abs=1e-15)
    assert sequential_probability(mm, [(A1, 0), (B1, 0), (C1, 1)]) == pytest.approx(0, abs=1e-15)
    eig = common_eigenstate([A1, B1, C1])
    assert sequential_probability(eig, [(A1, 0), (B1, 0), (C1, 0)]) == pytest.approx(1, abs=1e-12)


def test_sequential_probability_dimension_mismatch(square):
    with pytest.raises(DimensionError):
        sequential_probability(maximally_mixed(3), [(square["A1"], 0)])
    with pytest.raises(ValueError):
        sequential_probability(maximally_mixed(2), [])


def test_imaginary_expectation_is_an_error(square):
    # <A1 C1> with non-commuting factors is not Hermitian; a state with
    # nonzero expectation of the resulting anti-Hermitian part must be rejected.
    rho = random_state(2, np.random.default_rng(3), rank=1)
    op = square["A1"].matrix @ square["A2"].matrix
    with pytest.raises(ConsistencyError):
        rho.expect(op)


def test_post_measurement_state_examples(square):
    A1 = square["A1"]
    p, state = post_measurement_state(maximally_mixed(2), A1, 0)
    assert p == pytest.approx(0.5)
    assert linalg.approx_eq(state.matrix, projector(A1, 0) / 2, 1e-15)

    eig = common_eigenstate([A1])
    p, state = post_measurement_state(eig, A1, 0)
    assert p == pytest.approx(1)
    assert linalg.approx_eq(state.matrix, eig.matrix, 1e-12)

    with pytest.raises(ZeroProbabilityBranch):
        post_measurement_state(eig, A1, 1)


def test_post_measurement_states_are_valid(two_qubit_states, square):
    for rho in two_qubit_states[:20]:
        for o in square.observables:
            total = 0.0
            for k in (0, 1):
                p, state = post_measurement_state(rho, o, k)
                total += p
                assert linalg.is_psd(state.matrix)
                assert abs(linalg.trace(state.matrix) - 1) < 1e-12
            assert total == pytest.approx(1, abs=1e-12)


def test_moment_matches_sequential_on_maximally_mixed(square):
    ctx = square.context("R1")
    A1, B1, C1 = square["A1"], square["B1"], square["C1"]
    mm = maximally_mixed(2)
    assert moment_probability(mm, A1, B1, C1, 0, 0, 0) == pytest.approx(0.25, abs=1e-15)
    total = sum(moment_probability(mm, A1, B1, C1, *bits) for bits in itertools.product((0, 1), repeat=3))
    assert total == pytest.approx(1, abs=1e-15)
    assert ctx.expected_product_sign == 1


@pytest.mark.parametrize("label", ["R1", "R2", "R3", "L1", "L2", "L3"])
def test_moment_matches_sequential_random(two_qubit_states, square, label):
    ctx = square.context(label)
    for rho in two_qubit_states[:50]:
        for bits in itertools.product((0, 1), repeat=3):
            seq = sequential_probability(rho, list(zip(ctx.members, bits)))
            mom = moment_probability(rho, *ctx.members, *bits)
            assert abs(seq - mom) < 1e-9


def test_moment_rejects_noncommuting(square):
    with pytest.raises(ValueError):
        moment_probability(maximally_mixed(2), square["A1"], square["A2"], square["C1"], 0, 0, 0)


def test_expectation_products(two_qubit_states, three_qubit_states, square, star):
    for rho in two_qubit_states:
        assert expectation_product(rho, square.context("R1")) == pytest.approx(1, abs=1e-12)
        assert expectation_product(rho, square.context("L1")) == pytest.approx(-1, abs=1e-12)
    for rho in three_qubit_states:
        assert expectation_product(rho, star.context("E1")) == pytest.approx(-1, abs=1e-12)
    with pytest.raises(DimensionError):
        expectation_product(maximally_mixed(3), square.context("R1"))


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), rank=st.integers(1, 4), ctx_index=st.integers(0, 5))
def test_order_invariance(square, seed, rank, ctx_index):
    rho = random_state(2, np.random.default_rng(seed), rank=rank)
    ctx = square.contexts[ctx_index]
    for bits in itertools.product((0, 1), repeat=3):
        seq = list(zip(ctx.members, bits))
        ref = sequential_probability(rho, seq)
        assert abs(sandwiched_probability(rho, seq) - ref) < 1e-9
        for perm in itertools.permutations(seq):
            assert abs(sequential_probability(rho, list(perm)) - ref) < 1e-9


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), edge=st.integers(0, 4))
def test_star_order_invariance(star, seed, edge):
    rho = random_state(3, np.random.default_rng(seed))
    e = star.edges[edge]
    for bits in itertools.product((0, 1), repeat=4):
        seq = list(zip(e.members, bits))
        ref = sequential_probability(rho, seq)
        for perm in itertools.islice(itertools.permutations(seq), 1, None, 5):
            assert abs(sequential_probability(rho, list(perm)) - ref) < 1e-9


def test_parity_law(two_qubit_states):
    for rho in two_qubit_states[:50]:
        for r in VALID_ROUNDS:
            dist = joint_distribution(rho, context_for(r))
            for bits, p in dist.probs.items():
                if not winning_condition(r, *bits):
                    assert abs(p) < 1e-12


def test_cross_context_equality_on_maximally_mixed():
    mm = maximally_mixed(2)
    diagonal = [r for r in VALID_ROUNDS if r.is_diagonal]
    cyclic = [r for r in VALID_ROUNDS if r.is_cyclic]
    even = [b for b in itertools.product((0, 1), repeat=3) if sum(b) % 2 == 0]
    odd = [b for b in itertools.product((0, 1), repeat=3) if sum(b) % 2 == 1]
    for d, c in zip(diagonal, cyclic):
        pd = joint_distribution(mm, context_for(d)).probs
        pc = joint_distribution(mm, context_for(c)).probs
        for be, bo in zip(even, odd):
            assert abs(pc[bo] - pd[be]) < 1e-12
            assert abs(pc[be] - pd[bo]) < 1e-12


def test_dephasing_reconstructs_joint_eigenbasis_projection(two_qubit_states, square):
    ctx = square.context("L2")
    for rho in two_qubit_states[:10]:
        mixture, branches = dephase(rho, ctx.members[:2])
        # oracle: pinch directly with the joint projectors
        expected = np.zeros((4, 4), dtype=complex)
        for a, b in itertools.product((0, 1), repeat=2):
            p = projector(ctx.members[0], a) @ projector(ctx.members[1], b)
            expected += p @ rho.matrix @ p
        assert linalg.approx_eq(mixture, expected, 1e-12)
        assert sum(p for p, _ in branches.values()) == pytest.approx(1, abs=1e-12)

    mixture, _ = dephase(maximally_mixed(2), ctx.members)
    assert linalg.approx_eq(mixture, np.eye(4) / 4, 1e-15)


def test_outcome_distribution_normalized(three_qubit_states, star):
    for rho in three_qubit_states[:10]:
        for e in star.edges:
            dist = joint_distribution(rho, e)
            assert len(dist.probs) == 16
            assert abs(dist.total() - 1) < 1e-9 * 16
            assert all(-1e-9 <= p <= 1 + 1e-9 for p in dist.probs.values())


def test_common_eigenstate_requires_consistent_outcomes(square):
    # A1 B1 C1 = I, so outcomes (0, 0, 1) have no common eigenvector
    with pytest.raises(ZeroProbabilityBranch):
        common_eigenstate([square["A1"], square["B1"], square["C1"]], [0, 0, 1])
