"""Command-line interface.

Exit codes: 0 when every check passes, 1 when a check fails (the report is
still written), 2 for usage or configuration errors.
"""

from __future__ import annotations

import argparse
import json
import sys
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from ksrand import game, simulator, verify
from ksrand.game import Check
from ksrand.observables import format_tables, magic_square, magic_star, tables
from ksrand.quantum import DensityState, InvalidStateError, common_eigenstate, maximally_mixed, random_state

STATE_NAMES = ("maximally-mixed", "common-eigenstate", "random-pure", "random-mixed")


class ConfigError(Exception):
    pass


def named_state(scenario: str, name: str, seed: int = 0) -> DensityState:
    n = 2 if scenario == "square" else 3
    if name == "maximally-mixed":
        return maximally_mixed(n)
    if name == "common-eigenstate":
        if scenario == "square":
            sq = magic_square()
            return common_eigenstate([sq["A1"], sq["B1"], sq["C1"]])
        return common_eigenstate(list(magic_star().context("E2").members))
    if name in ("random-pure", "random-mixed"):
        rng = np.random.default_rng(seed)
        return random_state(n, rng, rank=1 if name == "random-pure" else 2**n)
    raise ConfigError(f"unknown state {name!r}")


def load_state_file(path: str | Path, tol: float) -> DensityState:
    """Read a density matrix stored as row-major [re, im] pairs.

    Accepts a nested ``[[[re, im], ...], ...]`` list, a flat list of d*d pairs,
    or either of those under a ``"matrix"`` key. Plain numbers count as real.
    """
    try:
        data = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read state file {path}: {exc}") from exc
    if isinstance(data, dict):
        data = data.get("matrix")
    try:
        arr = np.array(data, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"state file {path} is not a numeric array") from exc
    if arr.ndim >= 1 and arr.shape[-1] == 2 and arr.ndim in (2, 3):
        m = arr[..., 0] + 1j * arr[..., 1]
    else:
        m = arr.astype(complex)
    if m.ndim == 1:
        d = int(round(np.sqrt(m.size)))
        if d * d != m.size:
            raise ConfigError(f"state file {path}: {m.size} entries is not a square matrix")
        m = m.reshape(d, d)
    try:
        return DensityState(m, tol)
    except (InvalidStateError, ValueError) as exc:
        raise ConfigError(f"state file {path}: {exc}") from exc


def _resolve_state(args) -> tuple[DensityState, str]:
    if args.state_file:
        rho = load_state_file(args.state_file, args.tolerance)
        descriptor = f"file:{Path(args.state_file).name}"
    else:
        rho = named_state(args.scenario, args.state, args.seed)
        descriptor = args.state
    want = 4 if args.scenario == "square" else 8
    if rho.dim != want:
        raise ConfigError(f"{args.scenario} scenario needs a {want}x{want} state, got {rho.dim}x{rho.dim}")
    return rho, descriptor


def _stamp(doc: dict, args) -> dict:
    if not args.deterministic:
        doc["generated_at"] = datetime.now(timezone.utc).isoformat()
    return doc


def _checks_text(checks: list[dict]) -> list[str]:
    return [
        f"  [{'PASS' if c['pass'] else 'FAIL'}] {c['name']} (tol {c['tolerance']:g})"
        + (f" value={c['value']:.12g}" if "value" in c else "")
        for c in checks
    ]


def _report_text(doc: dict) -> str:
    lines = []
    if "inequality" in doc:
        ineq = doc["inequality"]
        lines += [
            f"scenario: {doc['scenario']}  state: {doc['state_descriptor']}",
            f"{ineq['name']}: {ineq['value']:.12g} (quantum {ineq['quantum_value']}, classical bound {ineq['classical_bound']:g})",
            f"win probability: {doc['win_probability']:.12g}",
            f"guessing probability: {doc['guessing_probability']:.12g}",
            f"min-entropy: {doc['min_entropy_bits']:.12g} bits",
        ]
    if "checks" in doc:
        lines.append("checks:")
        lines += _checks_text(doc["checks"])
    sim = doc.get("simulation")
    if sim:
        emp = sim["empirical"]
        lines += [
            f"simulation: {sim['rounds']} rounds, seed {sim['seed']}",
            f"  empirical {emp['inequality']['name']}: {emp['inequality']['value']}",
            f"  empirical win rate: {emp['win_probability']['value']:.6f}",
            f"  empirical G: {emp['guessing_probability']['value']:.6f} +/- {emp['guessing_probability']['stderr']:.6f}",
            f"  empirical min-entropy: {emp['min_entropy_bits']['value']:.6f} bits",
        ]
        lines += _checks_text(sim["checks"])
    return "\n".join(lines)


def _emit(doc: dict, args, text: str | None = None) -> None:
    if args.format == "json":
        out = json.dumps(doc, indent=2) + "\n"
    else:
        out = (text if text is not None else _report_text(doc)) + "\n"
    if args.out:
        Path(args.out).write_text(out)
    else:
        sys.stdout.write(out)


def cmd_tables(args) -> int:
    doc = {"schema_version": game.SCHEMA_VERSION, **tables()}
    _emit(doc, args, format_tables())
    return 0


def cmd_verify(args, scenario: str) -> int:
    checks = verify.suite(scenario, n_states=args.states, seed=args.seed, tol=args.tolerance)
    doc = {
        "schema_version": game.SCHEMA_VERSION,
        "scenario": scenario,
        "random_states": args.states,
        "seed": args.seed,
        "tolerance": args.tolerance,
        "checks": [c.to_dict() for c in checks],
        "passed": all(c.passed for c in checks),
    }
    _emit(_stamp(doc, args), args)
    return 0 if doc["passed"] else 1


def _certification(args) -> tuple[dict, bool, DensityState]:
    rho, descriptor = _resolve_state(args)
    report = game.certify(rho, args.scenario, descriptor, args.tolerance)
    doc = report.to_document()
    passed = report.passed
    if getattr(args, "search_restarts", 0):
        res = game.search_min_guessing(args.scenario, restarts=args.search_restarts, seed=args.seed)
        doc["search"] = {
            "restarts": args.search_restarts,
            "seed": args.seed,
            "min_guessing_probability": res.min_G,
            "per_restart": list(res.per_restart),
        }
    return doc, passed, rho


def cmd_certify(args) -> int:
    doc, passed, _ = _certification(args)
    _emit(_stamp(doc, args), args)
    return 0 if passed else 1


def cmd_simulate(args) -> int:
    doc, passed, rho = _certification(args)
    cfg = simulator.SimulationConfig(args.scenario, rho, args.rounds, args.seed, doc["state_descriptor"])
    records = simulator.run_trials(cfg, workers=args.workers, tol=args.tolerance)
    emp = simulator.estimate(records)
    exact = verify.exact_outcome_table(rho, args.scenario)
    forbidden_seen = sum(not r.won for r in records)
    z = verify.max_standard_score(emp.frequencies, exact, emp.round_counts)
    sim_checks = [
        Check("forbidden_outcomes_never_sampled", forbidden_seen == 0, 0.0, float(forbidden_seen)),
        Check("frequencies_within_5_standard_errors", z <= 5.0, 5.0, z),
    ]
    doc["simulation"] = {
        "rounds": args.rounds,
        "seed": args.seed,
        "generator": "numpy Philox4x64, key=seed, counter word 3 = round index",
        "empirical": emp.to_dict(),
        "checks": [c.to_dict() for c in sim_checks],
    }
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            simulator.write_csv(records, fh)
    _emit(_stamp(doc, args), args)
    return 0 if passed and all(c.passed for c in sim_checks) else 1


def _u64(text: str) -> int:
    v = int(text, 0)
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be a positive integer")
    return v


def _nonneg_float(text: str) -> float:
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError("must be a nonnegative number")
    return v


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--format", choices=("json", "text"), default="json")
    common.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")
    common.add_argument("--deterministic", action="store_true", help="omit the timestamp field")
    common.add_argument("--seed", type=_u64, default=0, help="unsigned 64-bit seed (default 0)")
    common.add_argument("--tolerance", type=_nonneg_float, default=1e-9)

    state = argparse.ArgumentParser(add_help=False)
    state.add_argument("--scenario", choices=simulator.SCENARIOS, default="square")
    state.add_argument("--state", choices=STATE_NAMES, default="maximally-mixed")
    state.add_argument("--state-file", metavar="PATH", help="JSON density matrix of [re, im] pairs")

    parser = argparse.ArgumentParser(
        prog="ksrand",
        description="Contextuality-certified randomness: magic square and magic star.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tables", parents=[common], help="dump the observable tables")
    p.set_defaults(func=cmd_tables)

    for name, scenario in (("verify-square", "square"), ("verify-star", "star")):
        p = sub.add_parser(name, parents=[common], help=f"run the {scenario} invariant suite")
        p.add_argument("--states", type=_positive, default=100, help="number of random states")
        p.set_defaults(func=lambda a, s=scenario: cmd_verify(a, s))

    p = sub.add_parser("certify", parents=[common, state], help="certification report for one state")
    p.add_argument("--search-restarts", type=int, default=0, help="also search states for the smallest G")
    p.set_defaults(func=cmd_certify)

    p = sub.add_parser("simulate", parents=[common, state], help="Monte-Carlo trials plus empirical report")
    p.add_argument("--rounds", type=_positive, default=100_000)
    p.add_argument("--csv", metavar="PATH", help="write one CSV row per round here")
    p.add_argument("--workers", type=_positive, default=1)
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"ksrand: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
