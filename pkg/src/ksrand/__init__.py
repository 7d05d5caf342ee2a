"""Randomness certified by Kochen-Specker contextuality: magic square and magic star."""

from ksrand.game import (
    CertificationReport,
    GameInputs,
    beta,
    certify,
    delta,
    guessing_probability_square,
    guessing_probability_star,
    min_entropy,
    win_probability,
)
from ksrand.observables import Observable, MeasurementContext, magic_square, magic_star, pauli, projector
from ksrand.quantum import DensityState, maximally_mixed, sequential_probability

__version__ = "0.1.0"

__all__ = [
    "CertificationReport",
    "DensityState",
    "GameInputs",
    "MeasurementContext",
    "Observable",
    "beta",
    "certify",
    "delta",
    "guessing_probability_square",
    "guessing_probability_star",
    "magic_square",
    "magic_star",
    "maximally_mixed",
    "min_entropy",
    "pauli",
    "projector",
    "sequential_probability",
    "win_probability",
]
