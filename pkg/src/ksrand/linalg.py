"""Small dense complex linear algebra for 2-, 4- and 8-dimensional operators.

Matrices are plain ``numpy`` complex arrays. Everything here is a pure function;
results are frozen (read-only) so they can be shared between threads.
"""

from __future__ import annotations

import numpy as np

DEFAULT_TOL = 1e-9


class DimensionError(ValueError):
    """Raised when operand shapes do not agree."""


def as_matrix(a) -> np.ndarray:
    """Coerce ``a`` to a read-only square complex matrix."""
    m = np.array(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {m.shape}")
    m.flags.writeable = False
    return m


def _frozen(m: np.ndarray) -> np.ndarray:
    m.flags.writeable = False
    return m


def _check_same_dim(a: np.ndarray, b: np.ndarray) -> None:
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")


def identity(dim: int) -> np.ndarray:
    return _frozen(np.eye(dim, dtype=complex))


def tensor(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product; ``out[i*db + k, j*db + l] = a[i, j] * b[k, l]``."""
    return _frozen(np.kron(a, b))


def tensor_all(*factors: np.ndarray) -> np.ndarray:
    out = factors[0]
    for f in factors[1:]:
        out = tensor(out, f)
    return _frozen(np.array(out, dtype=complex))


def mul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    _check_same_dim(a, b)
    return _frozen(a @ b)


def mul_all(*ms: np.ndarray) -> np.ndarray:
    out = ms[0]
    for m in ms[1:]:
        out = mul(out, m)
    return _frozen(np.array(out, dtype=complex))


def trace(a: np.ndarray) -> complex:
    return complex(np.trace(a))


def adjoint(a: np.ndarray) -> np.ndarray:
    return _frozen(a.conj().T)


def approx_eq(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    """True iff the largest entrywise absolute difference is at most ``tol``."""
    _check_same_dim(a, b)
    return bool(np.max(np.abs(a - b)) <= tol)


def is_hermitian(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return approx_eq(a, adjoint(a), tol)


def is_involution(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return approx_eq(mul(a, a), identity(a.shape[0]), tol)


def commutes(a: np.ndarray, b: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return approx_eq(mul(a, b), mul(b, a), tol)


def min_eigenvalue(a: np.ndarray) -> float:
    """Smallest eigenvalue of the Hermitian part of ``a``."""
    h = (a + a.conj().T) / 2
    return float(np.linalg.eigvalsh(h)[0])


def is_psd(a: np.ndarray, tol: float = DEFAULT_TOL) -> bool:
    return is_hermitian(a, tol) and min_eigenvalue(a) >= -tol
