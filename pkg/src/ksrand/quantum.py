"""Density states and sequential projective (Lueders) measurements."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from ksrand import linalg
from ksrand.linalg import DEFAULT_TOL, DimensionError
from ksrand.observables import MeasurementContext, Observable, projector


class InvalidStateError(ValueError):
    """Matrix is not a valid density operator."""


class ZeroProbabilityBranch(ValueError):
    """A measurement outcome with (numerically) zero probability was requested."""


class ConsistencyError(RuntimeError):
    """A quantity that must be real came out with a significant imaginary part."""


@dataclass(frozen=True, eq=False)
class DensityState:
    """Trace-one positive semidefinite operator on 2 or 3 qubits."""

    matrix: np.ndarray
    tol: float = DEFAULT_TOL

    def __post_init__(self) -> None:
        m = linalg.as_matrix(self.matrix)
        object.__setattr__(self, "matrix", m)
        if not linalg.is_hermitian(m, self.tol):
            raise InvalidStateError("density matrix is not Hermitian")
        if abs(linalg.trace(m) - 1) > self.tol:
            raise InvalidStateError(f"trace is {linalg.trace(m).real:.3g}, not 1")
        if linalg.min_eigenvalue(m) < -self.tol:
            raise InvalidStateError("density matrix has a negative eigenvalue")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def n_qubits(self) -> int:
        return int(round(np.log2(self.dim)))

    def expect(self, op: np.ndarray) -> float:
        return _real(linalg.trace(linalg.mul(self.matrix, op)), self.tol)


@dataclass(frozen=True)
class OutcomeDistribution:
    """Joint outcome probabilities for one context, keyed by outcome bit tuples."""

    inputs: object
    probs: Mapping[tuple[int, ...], float] = field(default_factory=dict)

    def max(self, tol: float = DEFAULT_TOL) -> tuple[float, tuple[int, ...]]:
        """Largest probability and the lexicographically first outcome within ``tol`` of it."""
        top = max(self.probs.values())
        best = next(k for k in sorted(self.probs) if self.probs[k] >= top - tol)
        return top, best

    def total(self) -> float:
        return sum(self.probs.values())


def _real(z: complex, tol: float) -> float:
    if abs(z.imag) > tol:
        raise ConsistencyError(f"expected a real value, got {z}")
    return float(z.real)


def _check_dim(rho: DensityState, o: Observable | np.ndarray) -> None:
    d = o.dim if isinstance(o, Observable) else o.shape[0]
    if d != rho.dim:
        raise DimensionError(f"operator of dimension {d} on a state of dimension {rho.dim}")


def maximally_mixed(n_qubits: int) -> DensityState:
    if n_qubits not in (2, 3):
        raise ValueError(f"only 2 or 3 qubits are supported, got {n_qubits}")
    d = 2**n_qubits
    return DensityState(np.eye(d, dtype=complex) / d)


def pure_state(psi: Sequence[complex]) -> DensityState:
    v = np.asarray(psi, dtype=complex)
    v = v / np.linalg.norm(v)
    return DensityState(np.outer(v, v.conj()))


def random_state(n_qubits: int, rng: np.random.Generator, rank: int | None = None) -> DensityState:
    """Random state from a mixture of ``rank`` complex-Gaussian pure states.

    ``rank=1`` gives a pure state; ``None`` draws the rank uniformly.
    """
    d = 2**n_qubits
    if rank is None:
        rank = int(rng.integers(1, d + 1))
    g = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = g @ g.conj().T
    return DensityState(rho / np.trace(rho).real)


def random_states(n_qubits: int, count: int, seed: int) -> list[DensityState]:
    """``count`` reproducible states; even indices are pure, odd ones mixed."""
    rng = np.random.default_rng(seed)
    return [
        random_state(n_qubits, rng, rank=1 if i % 2 == 0 else None)
        for i in range(count)
    ]


def common_eigenstate(observables: Sequence[Observable], outcomes: Sequence[int] | None = None) -> DensityState:
    """Normalized projector onto the joint eigenspace of commuting observables.

    Raises ``ZeroProbabilityBranch`` if the joint eigenspace is empty.
    """
    outcomes = outcomes or [0] * len(observables)
    p = linalg.identity(observables[0].dim)
    for o, k in zip(observables, outcomes):
        p = linalg.mul(p, projector(o, k))
    tr = linalg.trace(p).real
    if tr <= DEFAULT_TOL:
        raise ZeroProbabilityBranch("observables have no common eigenvector with these outcomes")
    return DensityState(p / tr)


def sequential_probability(rho: DensityState, seq: Sequence[tuple[Observable, int]]) -> float:
    """Probability of a sequence of projective outcomes.

    For projectors ``P1..Pk`` this is ``Tr[P_{k-1}...P_1 rho P_1...P_{k-1} P_k]``:
    every measurement but the last collapses the state, the last is a plain
    Born-rule trace.
    """
    if not seq:
        raise ValueError("empty measurement sequence")
    m = rho.matrix
    for o, _ in seq:
        _check_dim(rho, o)
    for o, k in seq[:-1]:
        p = projector(o, k)
        m = p @ m @ p
    o, k = seq[-1]
    return _real(linalg.trace(m @ projector(o, k)), rho.tol)


def sandwiched_probability(rho: DensityState, seq: Sequence[tuple[Observable, int]]) -> float:
    """Same as :func:`sequential_probability` but collapsing on every step."""
    m = rho.matrix
    for o, k in seq:
        _check_dim(rho, o)
        p = projector(o, k)
        m = p @ m @ p
    return _real(linalg.trace(m), rho.tol)


def post_measurement_state(rho: DensityState, o: Observable, outcome: int) -> tuple[float, DensityState]:
    """Lueders update: ``p = Tr[P rho P]``, state ``P rho P / p``."""
    _check_dim(rho, o)
    p_op = projector(o, outcome)
    collapsed = p_op @ rho.matrix @ p_op
    p = _real(linalg.trace(collapsed), rho.tol)
    if p <= rho.tol:
        raise ZeroProbabilityBranch(f"outcome {outcome} of {o.label} has probability {p:.3g}")
    # re-symmetrize; the product of three matrices drifts by ~1e-17
    state = collapsed / p
    state = (state + state.conj().T) / 2
    return p, DensityState(state, rho.tol)


def _sign(*bits: int) -> int:
    return -1 if sum(bits) % 2 else 1


def moment_probability(
    rho: DensityState, A: Observable, B: Observable, C: Observable, a: int, b: int, c: int
) -> float:
    """Joint probability of outcomes (a, b, c) from the correlator expansion."""
    for x, y in ((A, B), (B, C), (A, C)):
        _check_dim(rho, x)
        _check_dim(rho, y)
        if not linalg.commutes(x.matrix, y.matrix, rho.tol):
            raise ValueError(f"{x.label} and {y.label} do not commute")
    e = rho.expect
    am, bm, cm = A.matrix, B.matrix, C.matrix
    total = (
        1
        + _sign(a) * e(am)
        + _sign(b) * e(bm)
        + _sign(c) * e(cm)
        + _sign(a, b) * e(am @ bm)
        + _sign(b, c) * e(bm @ cm)
        + _sign(a, c) * e(am @ cm)
        + _sign(a, b, c) * e(am @ bm @ cm)
    )
    return total / 8


def expectation_product(rho: DensityState, ctx: MeasurementContext) -> float:
    """``Tr[rho M1 M2 ... Mk]`` for the ordered members of ``ctx``."""
    for o in ctx.members:
        _check_dim(rho, o)
    return rho.expect(ctx.product())


def joint_distribution(rho: DensityState, ctx: MeasurementContext, inputs=None) -> OutcomeDistribution:
    """Sequential outcome probabilities over all bit tuples for ``ctx``."""
    probs = {
        bits: sequential_probability(rho, list(zip(ctx.members, bits)))
        for bits in itertools.product((0, 1), repeat=len(ctx))
    }
    return OutcomeDistribution(ctx.label if inputs is None else inputs, probs)


def dephase(rho: DensityState, observables: Sequence[Observable]) -> tuple[np.ndarray, dict]:
    """Measure ``observables`` in sequence and recombine the branches.

    Returns the mixture ``sum p(outcomes) rho_outcomes`` and the branch table
    ``{outcomes: (p, state)}``; zero-probability branches are left out.
    """
    branches: dict[tuple[int, ...], tuple[float, DensityState]] = {(): (1.0, rho)}
    for o in observables:
        nxt = {}
        for bits, (p, state) in branches.items():
            for k in (0, 1):
                try:
                    q, post = post_measurement_state(state, o, k)
                except ZeroProbabilityBranch:
                    continue
                nxt[bits + (k,)] = (p * q, post)
        branches = nxt
    mixture = sum(p * s.matrix for p, s in branches.values())
    return mixture, branches
