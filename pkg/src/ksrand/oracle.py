"""Brute-force classical bounds over deterministic noncontextual value assignments.

A noncontextual hidden-variable model assigns each observable a single value
+1 or -1, whatever context it is measured in. Every bound below is a linear
function of outcome statistics, so its maximum over convex mixtures of
deterministic assignments is attained at a deterministic one. Enumerating all
2**n assignments therefore gives the exact noncontextual bound.

Nothing here touches matrices: only context membership and the quantum
product signs are used.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, Mapping, NamedTuple, Sequence

from ksrand.observables import MeasurementContext, magic_square, magic_star


@dataclass(frozen=True)
class ValueAssignment:
    values: Mapping[str, int]

    def __post_init__(self) -> None:
        bad = {k: v for k, v in self.values.items() if v not in (-1, 1)}
        if bad:
            raise ValueError(f"values must be +1 or -1: {bad}")

    def __getitem__(self, label: str) -> int:
        return self.values[label]


class OracleResult(NamedTuple):
    value: int | Fraction
    witness: ValueAssignment
    visited: int


def assignments(labels: Sequence[str]) -> Iterator[ValueAssignment]:
    """All 2**len(labels) assignments, in a fixed order over sorted labels."""
    labels = sorted(labels)
    for vals in itertools.product((1, -1), repeat=len(labels)):
        yield ValueAssignment(dict(zip(labels, vals)))


def context_value(v: ValueAssignment, ctx: MeasurementContext) -> int:
    out = 1
    for label in ctx.labels:
        if label not in v.values:
            raise KeyError(f"assignment has no value for {label}")
        out *= v[label]
    return out


def satisfied_contexts(v: ValueAssignment, contexts: Sequence[MeasurementContext]) -> int:
    """How many contexts get the same product from ``v`` as from quantum theory."""
    return sum(context_value(v, c) == c.expected_product_sign for c in contexts)


def signed_sum(v: ValueAssignment, contexts: Sequence[MeasurementContext]) -> int:
    """Sum of context values, each weighted by its quantum product sign.

    For the square this is R1 + R2 + R3 - L1 - L2 - L3; for the star it is
    -E1 + E2 + E3 + E4 + E5.
    """
    return sum(c.expected_product_sign * context_value(v, c) for c in contexts)


def _labels(contexts: Sequence[MeasurementContext]) -> list[str]:
    return sorted({label for c in contexts for label in c.labels})


def _maximize(contexts, score) -> OracleResult:
    best = None
    witness = None
    visited = 0
    for v in assignments(_labels(contexts)):
        visited += 1
        s = score(v, contexts)
        if best is None or s > best:
            best, witness = s, v
    return OracleResult(best, witness, visited)


def max_delta_noncontextual() -> OracleResult:
    return _maximize(magic_square().contexts, signed_sum)


def max_beta_noncontextual() -> OracleResult:
    return _maximize(magic_star().edges, signed_sum)


def max_satisfied(contexts: Sequence[MeasurementContext]) -> OracleResult:
    return _maximize(contexts, satisfied_contexts)


def max_win_noncontextual() -> Fraction:
    """Best classical winning probability of the square game, as an exact fraction."""
    contexts = magic_square().contexts
    return Fraction(max_satisfied(contexts).value, len(contexts))


def max_win_noncontextual_star() -> Fraction:
    edges = magic_star().edges
    return Fraction(max_satisfied(edges).value, len(edges))
