"""Prepare-and-measure contextuality game, inequality values and certified randomness.

Inputs ``x, y, z`` in {1, 2, 3} pick ``A_x``, ``B_y`` and ``C_z`` from the magic
square. The six valid rounds are the diagonal ones (x = y = z, a row of the
square, outcome parity must be even) and the cyclic ones (y = x+1, z = x+2
mod 3, a column, outcome parity must be odd).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Iterable, Sequence

import numpy as np

from ksrand import linalg, oracle
from ksrand.linalg import DEFAULT_TOL, DimensionError
from ksrand.observables import MeasurementContext, Observable, magic_square, magic_star, projector
from ksrand.quantum import (
    DensityState,
    dephase,
    expectation_product,
    joint_distribution,
    maximally_mixed,
)

SCHEMA_VERSION = "1.0"

# Physical tolerance for the "inequality reaches its quantum maximum" constraint.
CONSTRAINT_TOL = 1e-6

SQUARE_QUANTUM_VALUE = 6
STAR_QUANTUM_VALUE = 5


class InvalidRoundError(ValueError):
    pass


def mod3_next(x: int, k: int) -> int:
    """Cyclic successor on {1, 2, 3}: ``((x - 1 + k) mod 3) + 1``."""
    if x not in (1, 2, 3):
        raise ValueError(f"input must be 1, 2 or 3, got {x!r}")
    return (x - 1 + k) % 3 + 1


@dataclass(frozen=True, order=True)
class GameInputs:
    x: int
    y: int
    z: int

    def __post_init__(self) -> None:
        if not all(v in (1, 2, 3) for v in (self.x, self.y, self.z)):
            raise InvalidRoundError(f"inputs must lie in {{1, 2, 3}}: {self}")
        if not (self.is_diagonal or self.is_cyclic):
            raise InvalidRoundError(f"{self} is neither x=y=z nor a cyclic round")

    @property
    def is_diagonal(self) -> bool:
        return self.x == self.y == self.z

    @property
    def is_cyclic(self) -> bool:
        return self.y == mod3_next(self.x, 1) and self.z == mod3_next(self.x, 2)

    @property
    def required_parity(self) -> int:
        return 0 if self.is_diagonal else 1

    def __str__(self) -> str:
        return f"({self.x},{self.y},{self.z})"


VALID_ROUNDS: tuple[GameInputs, ...] = tuple(
    [GameInputs(x, x, x) for x in (1, 2, 3)]
    + [GameInputs(x, mod3_next(x, 1), mod3_next(x, 2)) for x in (1, 2, 3)]
)


def winning_condition(inputs: GameInputs, a: int, b: int, c: int) -> bool:
    return (a ^ b ^ c) == inputs.required_parity


def context_for(inputs: GameInputs) -> MeasurementContext:
    """Commuting triple ``(A_x, B_y, C_z)`` in measurement order.

    The context label is that of the square row or column holding the triple.
    """
    sq = magic_square()
    members = (sq[f"A{inputs.x}"], sq[f"B{inputs.y}"], sq[f"C{inputs.z}"])
    wanted = {m.label for m in members}
    label = next(c.label for c in sq.contexts if set(c.labels) == wanted)
    sign = 1 if inputs.is_diagonal else -1
    return MeasurementContext(label, members, sign)


def alpha(inputs: GameInputs, a: int, b: int, c: int) -> int:
    """Weight of P(a,b,c|x,y,z) in the inequality written over probabilities."""
    s = -1 if (a ^ b ^ c) else 1
    return s if inputs.is_diagonal else -s


def _require_qubits(rho: DensityState, n: int) -> None:
    if rho.dim != 2**n:
        raise DimensionError(f"expected a {n}-qubit state, got dimension {rho.dim}")


# --- magic square -----------------------------------------------------------


def delta(rho: DensityState) -> float:
    """R1 + R2 + R3 - L1 - L2 - L3."""
    _require_qubits(rho, 2)
    return sum(c.expected_product_sign * expectation_product(rho, c) for c in magic_square().contexts)


def round_distributions(rho: DensityState) -> dict[GameInputs, dict[tuple[int, ...], float]]:
    _require_qubits(rho, 2)
    return {r: dict(joint_distribution(rho, context_for(r), r).probs) for r in VALID_ROUNDS}


def win_probability(rho: DensityState) -> float:
    """Winning probability with the six valid rounds drawn uniformly."""
    dists = round_distributions(rho)
    total = 0.0
    for r, probs in dists.items():
        total += sum(p for (a, b, c), p in probs.items() if winning_condition(r, a, b, c))
    return total / len(VALID_ROUNDS)


def delta_from_probabilities(rho: DensityState) -> float:
    """The square inequality rebuilt as ``sum alpha * P`` over rounds and outcomes."""
    return sum(
        alpha(r, *bits) * p
        for r, probs in round_distributions(rho).items()
        for bits, p in probs.items()
    )


@dataclass(frozen=True)
class GuessResult:
    G: float
    inputs: object
    outcomes: tuple[int, ...]
    constraint_value: float
    constraint_satisfied: bool


def guessing_probability_square(rho: DensityState, tol: float = DEFAULT_TOL) -> GuessResult:
    """Largest joint outcome probability over the six rounds and eight outcomes.

    Ties go to the lexicographically smallest ``(x, y, z, a, b, c)``.
    """
    d = delta(rho)
    dists = [joint_distribution(rho, context_for(r), r) for r in sorted(VALID_ROUNDS)]
    G, r, bits = _first_max(dists, tol)
    ok = abs(d - SQUARE_QUANTUM_VALUE) <= CONSTRAINT_TOL
    return GuessResult(G, r, bits, d, ok)


def _first_max(dists, tol: float):
    top = max(dist.max(tol)[0] for dist in dists)
    for dist in dists:
        p, bits = dist.max(tol)
        if p >= top - tol:
            return top, dist.inputs, bits


# --- magic star -------------------------------------------------------------


def beta(rho: DensityState) -> float:
    """-E1 + E2 + E3 + E4 + E5."""
    _require_qubits(rho, 3)
    return sum(e.expected_product_sign * expectation_product(rho, e) for e in magic_star().edges)


def edge_distributions(rho: DensityState) -> dict[str, dict[tuple[int, ...], float]]:
    _require_qubits(rho, 3)
    return {e.label: dict(joint_distribution(rho, e).probs) for e in magic_star().edges}


def star_winning_condition(edge: MeasurementContext, outcomes: Sequence[int]) -> bool:
    """Outcome parity must be odd on the -I edge and even on the others."""
    parity = sum(outcomes) % 2
    return parity == (1 if edge.expected_product_sign < 0 else 0)


def star_win_probability(rho: DensityState) -> float:
    dists = edge_distributions(rho)
    edges = magic_star().edges
    total = sum(
        p for e in edges for bits, p in dists[e.label].items() if star_winning_condition(e, bits)
    )
    return total / len(edges)


def guessing_probability_star(rho: DensityState, tol: float = DEFAULT_TOL) -> GuessResult:
    b = beta(rho)
    dists = [joint_distribution(rho, e) for e in magic_star().edges]
    G, label, bits = _first_max(dists, tol)
    ok = abs(b - STAR_QUANTUM_VALUE) <= CONSTRAINT_TOL
    return GuessResult(G, label, bits, b, ok)


def min_entropy(G: float) -> float:
    """Min-entropy in bits, ``-log2 G``."""
    if not 0 < G <= 1:
        raise ValueError(f"guessing probability must lie in (0, 1], got {G!r}")
    return -math.log2(G) + 0.0


# --- preparation equivalence ------------------------------------------------


def game_preparations() -> list[tuple[Observable, Observable]]:
    """Alice's six commuting pairs ``(A_x, B_y)``, one per valid round."""
    sq = magic_square()
    return [(sq[f"A{r.x}"], sq[f"B{r.y}"]) for r in VALID_ROUNDS]


@dataclass(frozen=True)
class PreparationResult:
    label: str
    mixture_equals_input: bool
    weights: dict[tuple[int, ...], float]
    pure_branches: bool
    branch_states: tuple[np.ndarray, ...] = field(repr=False)


@dataclass(frozen=True)
class PreparationReport:
    preparations: tuple[PreparationResult, ...]
    distinct_pairs: tuple[tuple[str, str], ...]
    tolerance: float

    @property
    def passed(self) -> bool:
        return all(p.mixture_equals_input for p in self.preparations) and bool(self.distinct_pairs)


def _same_decomposition(s1: Sequence[np.ndarray], s2: Sequence[np.ndarray], tol: float) -> bool:
    if len(s1) != len(s2):
        return False
    return all(any(linalg.approx_eq(a, b, tol) for b in s2) for a in s1)


def preparation_equivalence_check(
    pairs: Iterable[tuple[Observable, Observable]] | None = None,
    rho: DensityState | None = None,
    tol: float = 1e-12,
) -> PreparationReport:
    """Prepare by measuring each commuting pair on ``rho`` and recombining the branches.

    Each preparation passes when its probability-weighted mixture of post-
    measurement states is ``rho`` again. ``distinct_pairs`` lists preparations
    whose branch states (as sets of density matrices) differ.
    """
    rho = rho or maximally_mixed(2)
    pairs = list(pairs) if pairs is not None else game_preparations()
    results = []
    for first, second in pairs:
        if not linalg.commutes(first.matrix, second.matrix, tol):
            raise ValueError(f"{first.label} and {second.label} do not commute")
        mixture, branches = dephase(rho, [first, second])
        states = tuple(s.matrix for _, s in branches.values())
        pure = all(abs(linalg.trace(s @ s) - 1) <= 1e-9 for s in states)
        results.append(
            PreparationResult(
                label=f"{first.label},{second.label}",
                mixture_equals_input=linalg.approx_eq(mixture, rho.matrix, tol),
                weights={bits: p for bits, (p, _) in branches.items()},
                pure_branches=pure,
                branch_states=states,
            )
        )
    distinct = tuple(
        (p.label, q.label)
        for i, p in enumerate(results)
        for q in results[i + 1 :]
        if not _same_decomposition(p.branch_states, q.branch_states, 1e-9)
    )
    return PreparationReport(tuple(results), distinct, tol)


# --- reports ----------------------------------------------------------------


@dataclass(frozen=True)
class Check:
    name: str
    passed: bool
    tolerance: float
    value: float | None = None

    def to_dict(self) -> dict:
        out = {"name": self.name, "pass": self.passed, "tolerance": self.tolerance}
        if self.value is not None:
            out["value"] = self.value
        return out


@dataclass(frozen=True)
class CertificationReport:
    scenario: str
    delta_or_beta: float
    classical_bound: float
    win_probability: float
    guessing_probability: float
    min_entropy_bits: float
    state_descriptor: str
    checks: tuple[Check, ...]
    argmax: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self) -> dict:
        """Flat serialization of the report fields plus ``schema_version``."""
        d = asdict(self)
        d["checks"] = [c.to_dict() for c in self.checks]
        d.pop("argmax")
        d["schema_version"] = SCHEMA_VERSION
        return d

    def to_document(self) -> dict:
        """Nested layout used by the command-line reports."""
        name = "magic-square delta" if self.scenario == "square" else "magic-star beta"
        quantum_value = SQUARE_QUANTUM_VALUE if self.scenario == "square" else STAR_QUANTUM_VALUE
        return {
            "schema_version": SCHEMA_VERSION,
            "scenario": self.scenario,
            "state_descriptor": self.state_descriptor,
            "inequality": {
                "name": name,
                "value": self.delta_or_beta,
                "quantum_value": quantum_value,
                "classical_bound": self.classical_bound,
            },
            "win_probability": self.win_probability,
            "guessing_probability": self.guessing_probability,
            "guessing_argmax": self.argmax,
            "min_entropy_bits": self.min_entropy_bits,
            "checks": [c.to_dict() for c in self.checks],
        }


def _clean(x: float) -> float:
    # 12 decimals: far below every tolerance, hides last-ulp noise in reports
    return round(x, 12) + 0.0


def certify(rho: DensityState, scenario: str, state_descriptor: str = "explicit", tol: float = DEFAULT_TOL) -> CertificationReport:
    if scenario == "square":
        return _certify_square(rho, state_descriptor, tol)
    if scenario == "star":
        return _certify_star(rho, state_descriptor, tol)
    raise ValueError(f"unknown scenario {scenario!r}")


def _certify_square(rho: DensityState, descriptor: str, tol: float) -> CertificationReport:
    d = delta(rho)
    pw = win_probability(rho)
    guess = guessing_probability_square(rho, tol)
    bound = oracle.max_delta_noncontextual().value
    h = min_entropy(guess.G)
    dists = round_distributions(rho)
    forbidden = max(
        p for r, probs in dists.items() for bits, p in probs.items() if not winning_condition(r, *bits)
    )
    checks = (
        Check("inequality_at_quantum_maximum", guess.constraint_satisfied, CONSTRAINT_TOL, d),
        Check("classical_bound_exceeded", d > bound + CONSTRAINT_TOL, CONSTRAINT_TOL, float(bound)),
        Check("win_probability_identity", abs(pw - 0.5 * (1 + d / 6)) <= tol, tol, pw),
        Check("alpha_weighted_sum_matches", abs(delta_from_probabilities(rho) - d) <= tol, tol),
        Check("forbidden_parity_vanishes", abs(forbidden) <= tol, tol, forbidden),
        Check(
            "distributions_normalized",
            all(abs(sum(p.values()) - 1) <= tol * 8 for p in dists.values()),
            tol * 8,
        ),
        Check("min_entropy_consistent", abs(h + math.log2(guess.G)) <= tol, tol, h),
    )
    return CertificationReport(
        scenario="square",
        delta_or_beta=_clean(d),
        classical_bound=float(bound),
        win_probability=_clean(pw),
        guessing_probability=_clean(guess.G),
        min_entropy_bits=_clean(h),
        state_descriptor=descriptor,
        checks=checks,
        argmax={
            "inputs": [guess.inputs.x, guess.inputs.y, guess.inputs.z],
            "outcomes": list(guess.outcomes),
        },
    )


def _certify_star(rho: DensityState, descriptor: str, tol: float) -> CertificationReport:
    b = beta(rho)
    pw = star_win_probability(rho)
    guess = guessing_probability_star(rho, tol)
    bound = oracle.max_beta_noncontextual().value
    h = min_entropy(guess.G)
    dists = edge_distributions(rho)
    edges = {e.label: e for e in magic_star().edges}
    forbidden = max(
        p for label, probs in dists.items() for bits, p in probs.items()
        if not star_winning_condition(edges[label], bits)
    )
    checks = (
        Check("inequality_at_quantum_maximum", guess.constraint_satisfied, CONSTRAINT_TOL, b),
        Check("classical_bound_exceeded", b > bound + CONSTRAINT_TOL, CONSTRAINT_TOL, float(bound)),
        Check("win_probability_identity", abs(pw - 0.5 * (1 + b / 5)) <= tol, tol, pw),
        Check("forbidden_parity_vanishes", abs(forbidden) <= tol, tol, forbidden),
        Check(
            "distributions_normalized",
            all(abs(sum(p.values()) - 1) <= tol * 16 for p in dists.values()),
            tol * 16,
        ),
        Check("min_entropy_consistent", abs(h + math.log2(guess.G)) <= tol, tol, h),
    )
    return CertificationReport(
        scenario="star",
        delta_or_beta=_clean(b),
        classical_bound=float(bound),
        win_probability=_clean(pw),
        guessing_probability=_clean(guess.G),
        min_entropy_bits=_clean(h),
        state_descriptor=descriptor,
        checks=checks,
        argmax={"edge": guess.inputs, "outcomes": list(guess.outcomes)},
    )


# --- numerical search over states ---------------------------------------------


def _joint_projectors(contexts: Sequence[MeasurementContext]) -> np.ndarray:
    """Stack of joint projectors, one per (context, outcome tuple)."""
    out = []
    for ctx in contexts:
        for bits in itertools.product((0, 1), repeat=len(ctx)):
            p = np.eye(ctx.members[0].dim, dtype=complex)
            for o, k in zip(ctx.members, bits):
                p = p @ projector(o, k)
            out.append(p)
    return np.array(out)


@dataclass(frozen=True)
class SearchResult:
    scenario: str
    min_G: float
    best_restart: int
    per_restart: tuple[float, ...]
    best_state: np.ndarray = field(repr=False)


def _params_to_state(theta: np.ndarray, d: int) -> np.ndarray:
    t = theta[: d * d].reshape(d, d) + 1j * theta[d * d :].reshape(d, d)
    rho = t @ t.conj().T
    return rho / np.trace(rho).real


def search_min_guessing(
    scenario: str = "square",
    restarts: int = 8,
    seed: int = 0,
    workers: int = 1,
    maxiter: int = 400,
) -> SearchResult:
    """Random-restart Nelder-Mead search for the state with the smallest guessing probability.

    For the fixed square (or star) observables every state reaches the quantum
    maximum of the inequality, so the constraint holds throughout the search.
    The result is numerical evidence only. Restart ``i`` uses the ``i``-th
    spawned child of ``SeedSequence(seed)``, so the result does not depend on
    ``workers``.
    """
    from scipy.optimize import minimize

    if scenario == "square":
        contexts, d = [context_for(r) for r in VALID_ROUNDS], 4
    elif scenario == "star":
        contexts, d = list(magic_star().edges), 8
    else:
        raise ValueError(f"unknown scenario {scenario!r}")
    stack = _joint_projectors(contexts)

    def objective(theta: np.ndarray) -> float:
        rho = _params_to_state(theta, d)
        return float(np.einsum("kij,ji->k", stack, rho).real.max())

    def one(child: np.random.SeedSequence) -> tuple[float, np.ndarray]:
        rng = np.random.default_rng(child)
        x0 = rng.normal(size=2 * d * d)
        res = minimize(objective, x0, method="Nelder-Mead", options={"maxiter": maxiter, "xatol": 1e-10, "fatol": 1e-12})
        return float(res.fun), _params_to_state(res.x, d)

    children = np.random.SeedSequence(seed).spawn(restarts)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, children))
    else:
        results = [one(c) for c in children]
    values = tuple(v for v, _ in results)
    best = int(np.argmin(values))
    return SearchResult(scenario, values[best], best, values, results[best][1])
