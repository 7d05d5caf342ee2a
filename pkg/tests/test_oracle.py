from fractions import Fraction

import pytest

from ksrand import oracle
from ksrand.oracle import ValueAssignment, assignments, context_value


def test_context_value_examples(square):
    ones = ValueAssignment({o.label: 1 for o in square.observables})
    for ctx in square.contexts:
        assert context_value(ones, ctx) == 1
    one_flip = ValueAssignment({**ones.values, "A1": -1})
    assert context_value(one_flip, square.context("R1")) == -1


def test_missing_label(square):
    with pytest.raises(KeyError):
        context_value(ValueAssignment({"A1": 1}), square.context("R1"))


def test_bad_value():
    with pytest.raises(ValueError):
        ValueAssignment({"A1": 0})


def test_product_of_all_contexts_is_plus_one(square):
    # every label sits in exactly one row and one column
    count = 0
    for v in assignments([o.label for o in square.observables]):
        prod = 1
        for ctx in square.contexts:
            prod *= context_value(v, ctx)
        assert prod == 1
        count += 1
    assert count == 512


def test_max_delta():
    res = oracle.max_delta_noncontextual()
    assert res.value == 4
    assert res.visited == 512
    assert list(res.witness.values) == sorted(res.witness.values)


def test_no_assignment_reaches_quantum_value(square):
    values = {oracle.signed_sum(v, square.contexts) for v in assignments([o.label for o in square.observables])}
    assert max(values) == 4
    assert 6 not in values


def test_max_beta(star):
    res = oracle.max_beta_noncontextual()
    assert res.value == 3
    assert res.visited == 1024
    assert oracle.signed_sum(res.witness, star.edges) == 3
    values = {oracle.signed_sum(v, star.edges) for v in assignments([o.label for o in star.observables])}
    assert 5 not in values


def test_max_win(square):
    win = oracle.max_win_noncontextual()
    assert win == Fraction(5, 6)
    res = oracle.max_satisfied(square.contexts)
    assert res.value == 5
    # deterministic version of win = (1 + delta / 6) / 2
    assert 2 * (6 * win) - 6 == oracle.max_delta_noncontextual().value
    assert win == Fraction(1, 2) * (1 + Fraction(oracle.max_delta_noncontextual().value, 6))


def test_at_most_five_of_six(square):
    counts = [oracle.satisfied_contexts(v, square.contexts) for v in assignments([o.label for o in square.observables])]
    assert max(counts) == 5
    assert counts.count(5) >= 1


def test_star_at_most_four_of_five(star):
    counts = [oracle.satisfied_contexts(v, star.edges) for v in assignments([o.label for o in star.observables])]
    assert max(counts) == 4
    assert oracle.max_win_noncontextual_star() == Fraction(4, 5)


def test_witness_is_stable():
    assert oracle.max_delta_noncontextual().witness == oracle.max_delta_noncontextual().witness
