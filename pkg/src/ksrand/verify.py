"""Invariant suites for the square and star constructions.

Each suite returns a list of :class:`~ksrand.game.Check`; a build is healthy
when every check passes.
"""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np

from ksrand import game, linalg, oracle
from ksrand.game import VALID_ROUNDS, Check, context_for, winning_condition
from ksrand.observables import magic_square, magic_star
from ksrand.quantum import (
    maximally_mixed,
    moment_probability,
    random_states,
    sandwiched_probability,
    sequential_probability,
)

# Forbidden-parity probabilities and mixture equalities are exact up to rounding.
EXACT_TOL = 1e-12


def _context_check(contexts, tol: float) -> Check:
    ok = True
    for c in contexts:
        target = c.expected_product_sign * linalg.identity(c.members[0].dim)
        ok &= linalg.approx_eq(c.product(), target, tol)
        ok &= all(linalg.commutes(a.matrix, b.matrix, tol) for a, b in itertools.combinations(c.members, 2))
    return Check("context_products_and_commutation", bool(ok), tol)


def square_suite(n_states: int = 100, seed: int = 0, tol: float = 1e-9) -> list[Check]:
    sq = magic_square()
    states = random_states(2, n_states, seed)
    checks = [_context_check(sq.contexts, tol)]

    dev = max(abs(game.delta(r) - 6) for r in states)
    checks.append(Check("delta_is_6_for_random_states", dev <= tol, tol, dev))

    res = oracle.max_delta_noncontextual()
    checks.append(Check("noncontextual_delta_bound_is_4", res.value == 4 and res.visited == 512, 0.0, res.value))
    win = oracle.max_win_noncontextual()
    checks.append(Check("noncontextual_win_is_5_6", win == Fraction(5, 6), 0.0, float(win)))

    dev = max(abs(game.win_probability(r) - 0.5 * (1 + game.delta(r) / 6)) for r in states)
    checks.append(Check("win_probability_identity", dev <= tol, tol, dev))

    dev = 0.0
    forbidden = 0.0
    order = 0.0
    for r in states[:50]:
        for rnd in VALID_ROUNDS:
            ctx = context_for(rnd)
            A, B, C = ctx.members
            for bits in itertools.product((0, 1), repeat=3):
                seq = list(zip(ctx.members, bits))
                p = sequential_probability(r, seq)
                dev = max(dev, abs(p - moment_probability(r, A, B, C, *bits)))
                if not winning_condition(rnd, *bits):
                    forbidden = max(forbidden, abs(p))
                for perm in itertools.permutations(seq):
                    order = max(order, abs(sequential_probability(r, list(perm)) - p))
                order = max(order, abs(sandwiched_probability(r, seq) - p))
    checks.append(Check("moment_expansion_matches_sequential", dev <= tol, tol, dev))
    checks.append(Check("forbidden_parity_vanishes", forbidden <= EXACT_TOL, EXACT_TOL, forbidden))
    checks.append(Check("measurement_order_invariance", order <= tol, tol, order))

    prep = game.preparation_equivalence_check(tol=EXACT_TOL)
    checks.append(Check("preparation_equivalence", prep.passed, EXACT_TOL))

    guess = game.guessing_probability_square(maximally_mixed(2))
    checks.append(Check("maximally_mixed_G_is_1_4", abs(guess.G - 0.25) <= EXACT_TOL, EXACT_TOL, guess.G))
    h = game.min_entropy(guess.G)
    checks.append(Check("maximally_mixed_two_bits", abs(h - 2) <= tol, tol, h))
    return checks


def star_suite(n_states: int = 100, seed: int = 0, tol: float = 1e-9) -> list[Check]:
    st = magic_star()
    states = random_states(3, n_states, seed)
    checks = [_context_check(st.edges, tol)]

    dev = max(abs(game.beta(r) - 5) for r in states)
    checks.append(Check("beta_is_5_for_random_states", dev <= tol, tol, dev))

    res = oracle.max_beta_noncontextual()
    checks.append(Check("noncontextual_beta_bound_is_3", res.value == 3 and res.visited == 1024, 0.0, res.value))
    win = oracle.max_win_noncontextual_star()
    checks.append(Check("noncontextual_star_win_is_4_5", win == Fraction(4, 5), 0.0, float(win)))

    forbidden = 0.0
    for r in states[:20]:
        for e in st.edges:
            for bits in itertools.product((0, 1), repeat=4):
                if not game.star_winning_condition(e, bits):
                    p = sequential_probability(r, list(zip(e.members, bits)))
                    forbidden = max(forbidden, abs(p))
    checks.append(Check("forbidden_parity_vanishes", forbidden <= EXACT_TOL, EXACT_TOL, forbidden))

    mm = maximally_mixed(3)
    dev = max(
        abs(p - 0.125)
        for e in st.edges
        for bits, p in game.edge_distributions(mm)[e.label].items()
        if game.star_winning_condition(e, bits)
    )
    checks.append(Check("maximally_mixed_allowed_outcomes_are_1_8", dev <= EXACT_TOL, EXACT_TOL, dev))
    guess = game.guessing_probability_star(mm)
    checks.append(Check("maximally_mixed_G_is_1_8", abs(guess.G - 0.125) <= EXACT_TOL, EXACT_TOL, guess.G))
    h = game.min_entropy(guess.G)
    checks.append(Check("maximally_mixed_three_bits", abs(h - 3) <= tol, tol, h))
    return checks


def suite(scenario: str, n_states: int = 100, seed: int = 0, tol: float = 1e-9) -> list[Check]:
    if scenario == "square":
        return square_suite(n_states, seed, tol)
    if scenario == "star":
        return star_suite(n_states, seed, tol)
    raise ValueError(f"unknown scenario {scenario!r}")


def exact_outcome_table(rho, scenario: str) -> dict[str, dict[tuple[int, ...], float]]:
    """Exact per-round outcome probabilities keyed like the simulator's round keys."""
    if scenario == "square":
        return {
            f"{r.x},{r.y},{r.z}": probs for r, probs in game.round_distributions(rho).items()
        }
    return game.edge_distributions(rho)


def max_standard_score(empirical, exact: dict, n_by_type: dict[str, int]) -> float:
    """Largest |observed - expected| / binomial SE over outcomes with 0 < p < 1."""
    worst = 0.0
    for key, probs in exact.items():
        n = n_by_type.get(key, 0)
        if n == 0:
            continue
        for bits, p in probs.items():
            if p <= EXACT_TOL or p >= 1 - EXACT_TOL:
                continue
            f = empirical.get(key, {}).get("".join(map(str, bits)), 0.0)
            worst = max(worst, abs(f - p) / np.sqrt(p * (1 - p) / n))
    return float(worst)
