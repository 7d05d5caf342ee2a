"""Round-by-round Monte-Carlo simulation of the square and star protocols.

Random numbers come from numpy's counter-based Philox generator. Round ``i``
of a run with seed ``s`` uses key ``s`` and a counter whose top 64-bit word is
``i``; each round draws at most five numbers, far below the 2**192 values
available before two substreams could overlap. A round's outcome therefore
depends only on ``(seed, i)``, and splitting the rounds across threads gives
the same records as a serial run.

Per round: one ``integers`` draw picks the round type (uniform over the six
valid square rounds or the five star edges), then one ``random`` draw per
observable selects the outcome, measuring in context order and collapsing the
state after each outcome.
"""

from __future__ import annotations

import csv
import io
import math
from collections import Counter, defaultdict
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from ksrand.game import VALID_ROUNDS, GameInputs, context_for, star_winning_condition, winning_condition
from ksrand.linalg import DEFAULT_TOL
from ksrand.observables import MeasurementContext, magic_star
from ksrand.quantum import DensityState, ZeroProbabilityBranch, post_measurement_state

SCENARIOS = ("square", "star")


@dataclass(frozen=True)
class SimulationConfig:
    scenario: str
    state: DensityState
    rounds: int
    seed: int
    state_descriptor: str = "explicit"

    def __post_init__(self) -> None:
        if self.scenario not in SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario!r}")
        if self.rounds < 1:
            raise ValueError("rounds must be at least 1")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be an unsigned 64-bit integer")
        want = 4 if self.scenario == "square" else 8
        if self.state.dim != want:
            raise ValueError(f"{self.scenario} needs a {want}x{want} state, got {self.state.dim}")


@dataclass(frozen=True)
class TrialRecord:
    round_index: int
    inputs: GameInputs | str
    outcomes: tuple[int, ...]
    won: bool


def _contexts(scenario: str) -> list[tuple[object, MeasurementContext]]:
    if scenario == "square":
        return [(r, context_for(r)) for r in VALID_ROUNDS]
    return [(e.label, e) for e in magic_star().edges]


def _branch_tree(rho: DensityState, ctx: MeasurementContext, tol: float) -> dict[tuple[int, ...], float]:
    """Probability of outcome 0 at every reachable node of the sequential measurement.

    Keys are the outcomes seen so far. Built once per run from Lueders updates.
    """
    tree: dict[tuple[int, ...], float] = {}
    frontier = {(): rho}
    for o in ctx.members:
        nxt = {}
        for prefix, state in frontier.items():
            p0 = 0.0
            for k in (0, 1):
                try:
                    p, post = post_measurement_state(state, o, k)
                except ZeroProbabilityBranch:
                    continue
                if k == 0:
                    p0 = p
                nxt[prefix + (k,)] = post
            tree[prefix] = p0
        frontier = nxt
    return tree


def _rng(seed: int, round_index: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, 0, round_index]))


def _sample_round(i: int, seed: int, contexts, trees, scenario: str, tol: float) -> TrialRecord:
    rng = _rng(seed, i)
    j = int(rng.integers(len(contexts)))
    inputs, ctx = contexts[j]
    tree = trees[j]
    bits: tuple[int, ...] = ()
    for _ in ctx.members:
        p0 = tree[bits]
        u = rng.random()
        if p0 <= tol:
            k = 1
        elif p0 >= 1 - tol:
            k = 0
        else:
            k = 0 if u < p0 else 1
        bits += (k,)
    if scenario == "square":
        won = winning_condition(inputs, *bits)
    else:
        won = star_winning_condition(ctx, bits)
    return TrialRecord(i, inputs, bits, won)


def run_trials(cfg: SimulationConfig, workers: int = 1, tol: float = DEFAULT_TOL) -> list[TrialRecord]:
    """Simulate ``cfg.rounds`` rounds; identical config gives identical records."""
    contexts = _contexts(cfg.scenario)
    trees = [_branch_tree(cfg.state, ctx, tol) for _, ctx in contexts]

    def block(lo: int, hi: int) -> list[TrialRecord]:
        return [_sample_round(i, cfg.seed, contexts, trees, cfg.scenario, tol) for i in range(lo, hi)]

    if workers <= 1:
        return block(0, cfg.rounds)
    step = math.ceil(cfg.rounds / workers)
    bounds = [(lo, min(lo + step, cfg.rounds)) for lo in range(0, cfg.rounds, step)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda b: block(*b), bounds))
    return [r for part in parts for r in part]


def round_key(inputs: GameInputs | str) -> str:
    if isinstance(inputs, GameInputs):
        return f"{inputs.x},{inputs.y},{inputs.z}"
    return str(inputs)


@dataclass(frozen=True)
class Estimate:
    value: float | None
    stderr: float | None

    def to_dict(self) -> dict:
        return {"value": self.value, "stderr": self.stderr}


@dataclass(frozen=True)
class EmpiricalReport:
    rounds: int
    inequality_name: str
    inequality: Estimate
    win_probability: Estimate
    guessing_probability: Estimate
    guessing_argmax: dict
    min_entropy_bits: Estimate
    round_counts: dict[str, int]
    frequencies: dict[str, dict[str, float]] = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "rounds": self.rounds,
            "inequality": {"name": self.inequality_name, **self.inequality.to_dict()},
            "win_probability": self.win_probability.to_dict(),
            "guessing_probability": self.guessing_probability.to_dict(),
            "guessing_argmax": self.guessing_argmax,
            "min_entropy_bits": self.min_entropy_bits.to_dict(),
            "round_counts": self.round_counts,
            "frequencies": self.frequencies,
        }


def _binomial_se(p: float, n: int) -> float:
    return math.sqrt(max(p * (1 - p), 0.0) / n)


def estimate(records: Sequence[TrialRecord]) -> EmpiricalReport:
    """Empirical inequality value, win rate, guessing probability and min-entropy.

    Frequencies are conditioned on round type. Standard errors are binomial,
    ``sqrt(p (1 - p) / n)`` with ``n`` the number of rounds of that type; the
    correlator error is ``sqrt((1 - E**2) / n)`` and the min-entropy error
    follows by the delta method. The inequality estimate is ``None`` unless
    every round type was sampled.
    """
    if not records:
        raise ValueError("no records to estimate from")
    star = not isinstance(records[0].inputs, GameInputs)

    counts: dict[str, Counter] = defaultdict(Counter)
    for rec in records:
        counts[round_key(rec.inputs)][rec.outcomes] += 1

    if star:
        signs = {e.label: e.expected_product_sign for e in magic_star().edges}
        name = "magic-star beta"
    else:
        signs = {round_key(r): (1 if r.is_diagonal else -1) for r in VALID_ROUNDS}
        name = "magic-square delta"

    n_by_type = {k: sum(c.values()) for k, c in counts.items()}
    total = 0.0
    var = 0.0
    for key, c in counts.items():
        n = n_by_type[key]
        corr = sum((-1) ** (sum(bits) % 2) * m for bits, m in c.items()) / n
        total += signs[key] * corr
        var += max(1 - corr**2, 0.0) / n
    if set(counts) == set(signs):
        ineq = Estimate(total, math.sqrt(var))
    else:
        ineq = Estimate(None, None)

    wins = sum(r.won for r in records)
    pw = wins / len(records)

    best = (-1.0, "", ())
    for key in sorted(counts, key=_key_order(star)):
        for bits in sorted(counts[key]):
            f = counts[key][bits] / n_by_type[key]
            if f > best[0]:
                best = (f, key, bits)
    g, g_key, g_bits = best
    g_se = _binomial_se(g, n_by_type[g_key])
    h = -math.log2(g) + 0.0
    h_se = g_se / (g * math.log(2))

    freqs = {
        key: {"".join(map(str, bits)): m / n_by_type[key] for bits, m in sorted(counts[key].items())}
        for key in sorted(counts, key=_key_order(star))
    }
    return EmpiricalReport(
        rounds=len(records),
        inequality_name=name,
        inequality=ineq,
        win_probability=Estimate(pw, _binomial_se(pw, len(records))),
        guessing_probability=Estimate(g, g_se),
        guessing_argmax={"round": g_key, "outcomes": list(g_bits)},
        min_entropy_bits=Estimate(h, h_se),
        round_counts={k: n_by_type[k] for k in sorted(n_by_type, key=_key_order(star))},
        frequencies=freqs,
    )


def _key_order(star: bool):
    if star:
        return lambda k: k
    return lambda k: tuple(int(v) for v in k.split(","))


def write_csv(records: Sequence[TrialRecord], out: TextIO) -> None:
    """One row per round: index, inputs (x,y,z or edge), outcome bits, won (0/1)."""
    if not records:
        return
    star = not isinstance(records[0].inputs, GameInputs)
    n_bits = len(records[0].outcomes)
    bit_names = ["a", "b", "c", "d"][:n_bits]
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["round_index"] + (["edge"] if star else ["x", "y", "z"]) + bit_names + ["won"])
    for r in records:
        ins = [r.inputs] if star else [r.inputs.x, r.inputs.y, r.inputs.z]
        writer.writerow([r.round_index, *ins, *r.outcomes, int(r.won)])


def records_to_csv(records: Sequence[TrialRecord]) -> str:
    buf = io.StringIO()
    write_csv(records, buf)
    return buf.getvalue()
