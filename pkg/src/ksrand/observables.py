"""Pauli operators, the two-qubit magic square and the three-qubit magic star.

Square layout (rows top to bottom, columns left to right)::

    C1 = Y.Z   B1 = Z.Y   A1 = X.X
    A2 = Z.X   C2 = X.Z   B2 = Y.Y
    B3 = X.Y   A3 = Y.X   C3 = Z.Z

Every row multiplies to +I and every column to -I.

The star is the Mermin pentagram on three qubits: six single-qubit X/Y
operators and four three-qubit products, arranged on five lines of four
commuting observables. Line ``E1 = {XXX, XYY, YXY, YYX}`` multiplies to -I,
the other four lines to +I.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from ksrand import linalg
from ksrand.linalg import DEFAULT_TOL

_PAULI = {
    "id": np.eye(2, dtype=complex),
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}
for _m in _PAULI.values():
    _m.flags.writeable = False


class InvalidContextError(ValueError):
    """A measurement context violates commutation or its product sign."""


def pauli(axis: str) -> np.ndarray:
    """Return the 2x2 Pauli matrix for ``axis`` in {"x", "y", "z", "id"}."""
    try:
        return _PAULI[axis]
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}") from None


@dataclass(frozen=True, eq=False)
class Observable:
    """A labelled dichotomic (+/-1) observable built as a tensor product of Paulis."""

    label: str
    factors: tuple[str, ...]
    matrix: np.ndarray

    @classmethod
    def from_factors(cls, label: str, factors: Sequence[str]) -> Observable:
        factors = tuple(factors)
        return cls(label, factors, linalg.tensor_all(*(pauli(f) for f in factors)))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @property
    def factor_string(self) -> str:
        return "".join("I" if f == "id" else f.upper() for f in self.factors)

    def __repr__(self) -> str:
        return f"Observable({self.label}={self.factor_string})"


@dataclass(frozen=True, eq=False)
class MeasurementContext:
    """An ordered set of mutually commuting observables.

    The member order is the order in which they are measured sequentially.
    Construction fails if any pair does not commute or if the ordered product
    differs from ``expected_product_sign * I``.
    """

    label: str
    members: tuple[Observable, ...]
    expected_product_sign: int

    def __post_init__(self) -> None:
        ms = self.members
        for i in range(len(ms)):
            for j in range(i + 1, len(ms)):
                if not linalg.commutes(ms[i].matrix, ms[j].matrix, DEFAULT_TOL):
                    raise InvalidContextError(
                        f"{self.label}: {ms[i].label} and {ms[j].label} do not commute"
                    )
        target = self.expected_product_sign * linalg.identity(ms[0].dim)
        if not linalg.approx_eq(self.product(), target, DEFAULT_TOL):
            raise InvalidContextError(
                f"{self.label}: product is not {self.expected_product_sign:+d} I"
            )

    def product(self) -> np.ndarray:
        return linalg.mul_all(*(m.matrix for m in self.members))

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(m.label for m in self.members)

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class MagicSquare:
    grid: tuple[tuple[Observable, ...], ...]
    rows: tuple[MeasurementContext, ...]
    columns: tuple[MeasurementContext, ...]

    @property
    def contexts(self) -> tuple[MeasurementContext, ...]:
        return self.rows + self.columns

    @property
    def observables(self) -> tuple[Observable, ...]:
        return tuple(o for row in self.grid for o in row)

    def __getitem__(self, label: str) -> Observable:
        for o in self.observables:
            if o.label == label:
                return o
        raise KeyError(label)

    def context(self, label: str) -> MeasurementContext:
        for c in self.contexts:
            if c.label == label:
                return c
        raise KeyError(label)


@dataclass(frozen=True, eq=False)
class MagicStar:
    observables: tuple[Observable, ...]
    edges: tuple[MeasurementContext, ...]

    @property
    def contexts(self) -> tuple[MeasurementContext, ...]:
        return self.edges

    def __getitem__(self, label: str) -> Observable:
        for o in self.observables:
            if o.label == label:
                return o
        raise KeyError(label)

    def context(self, label: str) -> MeasurementContext:
        for c in self.edges:
            if c.label == label:
                return c
        raise KeyError(label)


_SQUARE_LAYOUT = (
    (("C1", "yz"), ("B1", "zy"), ("A1", "xx")),
    (("A2", "zx"), ("C2", "xz"), ("B2", "yy")),
    (("B3", "xy"), ("A3", "yx"), ("C3", "zz")),
)


@lru_cache(maxsize=None)
def magic_square() -> MagicSquare:
    grid = tuple(
        tuple(Observable.from_factors(label, tuple(f)) for label, f in row)
        for row in _SQUARE_LAYOUT
    )
    rows = tuple(
        MeasurementContext(f"R{i + 1}", grid[i], +1) for i in range(3)
    )
    columns = tuple(
        MeasurementContext(f"L{j + 1}", tuple(grid[i][j] for i in range(3)), -1)
        for j in range(3)
    )
    return MagicSquare(grid, rows, columns)


_STAR_OBSERVABLES = (
    ("X1", ("x", "id", "id")),
    ("X2", ("id", "x", "id")),
    ("X3", ("id", "id", "x")),
    ("Y1", ("y", "id", "id")),
    ("Y2", ("id", "y", "id")),
    ("Y3", ("id", "id", "y")),
    ("XXX", ("x", "x", "x")),
    ("XYY", ("x", "y", "y")),
    ("YXY", ("y", "x", "y")),
    ("YYX", ("y", "y", "x")),
)

_STAR_EDGES = (
    ("E1", ("XXX", "XYY", "YXY", "YYX"), -1),
    ("E2", ("X1", "X2", "X3", "XXX"), +1),
    ("E3", ("X1", "Y2", "Y3", "XYY"), +1),
    ("E4", ("Y1", "X2", "Y3", "YXY"), +1),
    ("E5", ("Y1", "Y2", "X3", "YYX"), +1),
)


@lru_cache(maxsize=None)
def magic_star() -> MagicStar:
    obs = {label: Observable.from_factors(label, f) for label, f in _STAR_OBSERVABLES}
    edges = tuple(
        MeasurementContext(label, tuple(obs[m] for m in members), sign)
        for label, members, sign in _STAR_EDGES
    )
    counts = Counter(o.label for e in edges for o in e.members)
    if set(counts.values()) != {2}:
        raise InvalidContextError("every star observable must lie on exactly two edges")
    return MagicStar(tuple(obs.values()), edges)


def projector(o: Observable | np.ndarray, outcome: int) -> np.ndarray:
    """Projector onto the eigenspace of outcome bit ``outcome``.

    Outcome 0 is eigenvalue +1 and outcome 1 is eigenvalue -1, so
    ``projector(o, k) = (I + (-1)**k o) / 2``.
    """
    m = o.matrix if isinstance(o, Observable) else o
    if outcome not in (0, 1):
        raise ValueError(f"outcome must be 0 or 1, got {outcome!r}")
    sign = 1 - 2 * outcome
    return linalg.as_matrix((np.eye(m.shape[0]) + sign * m) / 2)


def tables() -> dict:
    """JSON-ready description of both observable tables."""
    sq = magic_square()
    st = magic_star()

    def ctx(c: MeasurementContext) -> dict:
        return {"label": c.label, "members": list(c.labels), "product_sign": c.expected_product_sign}

    return {
        "square": {
            "observables": [
                {"label": o.label, "factors": o.factor_string, "row": i + 1, "column": j + 1}
                for i, row in enumerate(sq.grid)
                for j, o in enumerate(row)
            ],
            "contexts": [ctx(c) for c in sq.contexts],
        },
        "star": {
            "observables": [
                {
                    "label": o.label,
                    "factors": o.factor_string,
                    "edges": [e.label for e in st.edges if o in e.members],
                }
                for o in st.observables
            ],
            "contexts": [ctx(e) for e in st.edges],
        },
    }


def format_tables() -> str:
    """Human-readable square grid and star edge lists."""
    sq = magic_square()
    lines = ["Magic square (rows multiply to +I, columns to -I):"]
    for row in sq.grid:
        lines.append("  " + "  ".join(f"{o.label}={o.factor_string:<3}" for o in row))
    lines.append("")
    lines.append("Magic star (edge products):")
    for e in magic_star().edges:
        members = ", ".join(f"{o.label}={o.factor_string}" for o in e.members)
        lines.append(f"  {e.label} [{e.expected_product_sign:+d}]: {members}")
    return "\n".join(lines)
