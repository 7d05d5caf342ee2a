import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from ksrand import linalg
from ksrand.linalg import DimensionError
from ksrand.observables import pauli

I2 = np.eye(2)
I4 = np.eye(4)
X, Y, Z = (pauli(a) for a in "xyz")


def kron_by_index(a, b):
    """Index-formula oracle: out[i*db + k, j*db + l] = a[i, j] * b[k, l]."""
    da, db = a.shape[0], b.shape[0]
    out = np.zeros((da * db, da * db), dtype=complex)
    for i in range(da):
        for j in range(da):
            for k in range(db):
                for l in range(db):
                    out[i * db + k, j * db + l] = a[i, j] * b[k, l]
    return out


finite = st.floats(-3, 3, allow_nan=False, allow_infinity=False)


def complex_matrices(n):
    return st.builds(
        lambda re, im: re + 1j * im,
        arrays(np.float64, (n, n), elements=finite),
        arrays(np.float64, (n, n), elements=finite),
    )


def test_tensor_identities():
    assert np.array_equal(linalg.tensor(I2, I2), I4)


def test_tensor_xx_is_antidiagonal():
    expected = np.fliplr(np.eye(4))
    assert np.array_equal(linalg.tensor(X, X), expected)


def test_tensor_zz_is_diag():
    assert np.array_equal(linalg.tensor(Z, Z), np.diag([1, -1, -1, 1]))


@pytest.mark.parametrize("a", [X, Y, Z])
@pytest.mark.parametrize("b", [X, Y, Z, I2])
def test_tensor_matches_index_formula(a, b):
    assert np.array_equal(linalg.tensor(a, b), kron_by_index(a, b))


def test_mul_examples():
    m = np.arange(16).reshape(4, 4).astype(complex)
    assert np.array_equal(linalg.mul(I4, m), m)
    assert np.array_equal(linalg.mul(X, X), I2)
    assert np.array_equal(linalg.mul(X, Y), 1j * Z)


def test_mul_dimension_mismatch():
    with pytest.raises(DimensionError):
        linalg.mul(I2, I4)


def test_trace_and_adjoint():
    assert linalg.trace(I4) == 4
    assert linalg.trace(X) == 0
    assert np.array_equal(linalg.adjoint(I4), I4)
    assert np.array_equal(linalg.adjoint(Y), Y)
    assert np.array_equal(linalg.adjoint(1j * I2), -1j * I2)


def test_approx_eq():
    assert linalg.approx_eq(I2, I2, 0)
    assert not linalg.approx_eq(X, Z, 1e-9)
    assert linalg.approx_eq(linalg.mul(X, X), I2, 1e-12)
    with pytest.raises(DimensionError):
        linalg.approx_eq(I2, I4)


def test_results_are_read_only():
    m = linalg.tensor(X, Z)
    with pytest.raises(ValueError):
        m[0, 0] = 5


def test_psd_predicates():
    assert linalg.is_psd(I4 / 4)
    assert not linalg.is_psd(np.diag([1.0, -0.1]))
    assert not linalg.is_psd(np.array([[0, 1], [0, 0]], dtype=complex))


unit_entries = st.sampled_from([0, 1, -1, 1j, -1j])


def unit_matrices(n):
    return arrays(np.complex128, (n, n), elements=unit_entries)


@settings(max_examples=30, deadline=None)
@given(unit_matrices(2), unit_matrices(2), unit_matrices(2))
def test_tensor_associative_exact_on_pauli_entries(a, b, c):
    left = linalg.tensor(linalg.tensor(a, b), c)
    right = linalg.tensor(a, linalg.tensor(b, c))
    assert np.array_equal(left, right)


@settings(max_examples=30, deadline=None)
@given(complex_matrices(2), complex_matrices(2), complex_matrices(2))
def test_tensor_associative(a, b, c):
    left = linalg.tensor(linalg.tensor(a, b), c)
    right = linalg.tensor(a, linalg.tensor(b, c))
    # floating-point products only associate up to rounding
    assert linalg.approx_eq(left, right, 1e-12)


@settings(max_examples=30, deadline=None)
@given(complex_matrices(4), complex_matrices(4))
def test_trace_cyclic(a, b):
    assert abs(linalg.trace(linalg.mul(a, b)) - linalg.trace(linalg.mul(b, a))) < 1e-12


@settings(max_examples=30, deadline=None)
@given(complex_matrices(4), complex_matrices(4), complex_matrices(4))
def test_mul_distributes(a, b, c):
    assert linalg.approx_eq(linalg.mul(a, b + c), linalg.mul(a, b) + linalg.mul(a, c), 1e-12)


@settings(max_examples=30, deadline=None)
@given(complex_matrices(4))
def test_adjoint_involutive(a):
    assert np.array_equal(linalg.adjoint(linalg.adjoint(a)), a)


@settings(max_examples=30, deadline=None)
@given(complex_matrices(2), complex_matrices(2), complex_matrices(2), complex_matrices(2))
def test_mixed_product(a, b, c, d):
    lhs = linalg.tensor(linalg.mul(a, c), linalg.mul(b, d))
    rhs = linalg.mul(linalg.tensor(a, b), linalg.tensor(c, d))
    assert linalg.approx_eq(lhs, rhs, 1e-12)
