import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from vqcgenlab.errors import ConvergenceError, DegenerateInputError, ValidationError
from vqcgenlab.numkit import (expm_hermitian, haar_unitary, lanczos_ground, polar_unitary,
                              random_hermitian, seeded_rng, split_rng, stream)
from vqcgenlab.channels import PAULI


def test_polar_trivial_cases():
    assert np.allclose(polar_unitary(np.eye(4)), np.eye(4), atol=1e-14)
    assert np.allclose(polar_unitary(2 * np.eye(2)), np.eye(2), atol=1e-14)


def test_polar_diag_against_phase_grid():
    m = np.diag([1.0, -2.0])
    # oracle: brute force over diagonal phase unitaries
    phis = np.linspace(-np.pi, np.pi, 721)
    best = max(((a, b) for a in phis for b in phis),
               key=lambda ab: np.real(np.exp(-1j * ab[0]) * 1 + np.exp(-1j * ab[1]) * -2))
    oracle = np.diag(np.exp(1j * np.array(best)))
    assert np.allclose(polar_unitary(m), np.diag([1, -1]), atol=1e-12)
    assert np.allclose(polar_unitary(m), oracle, atol=1e-2)


def test_polar_zero_raises():
    with pytest.raises(DegenerateInputError):
        polar_unitary(np.zeros((3, 3)))


def test_polar_unitarity_1000(rng):
    worst = 0.0
    for _ in range(1000):
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        u = polar_unitary(m)
        worst = max(worst, np.linalg.norm(u @ u.conj().T - np.eye(4), 2))
    assert worst <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2 ** 32 - 1))
def test_polar_maximizes_trace(seed):
    r = seeded_rng(seed)
    m = r.standard_normal((3, 3)) + 1j * r.standard_normal((3, 3))
    u = polar_unitary(m)
    best = np.real(np.trace(u.conj().T @ m))
    for _ in range(20):
        v = haar_unitary(3, r)
        assert np.real(np.trace(v.conj().T @ m)) <= best + 1e-10


def test_expm_examples(rng):
    assert np.allclose(expm_hermitian(np.zeros((3, 3)), 1.7), np.eye(3))
    assert np.allclose(expm_hermitian(PAULI["Z"], np.pi), -np.eye(2), atol=1e-12)
    h = random_hermitian(4, rng)
    x = 1j * 0.3 * h
    series, term = np.eye(4, dtype=complex), np.eye(4, dtype=complex)
    for k in range(1, 21):
        term = term @ x / k
        series = series + term
    assert np.allclose(expm_hermitian(h, 0.3), series, atol=1e-10)


def test_expm_rejects_non_hermitian():
    with pytest.raises(ValidationError):
        expm_hermitian(np.array([[0, 1], [0, 0]]), 1.0)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2 ** 32 - 1), st.floats(-5, 5))
def test_expm_inverse(seed, s):
    h = random_hermitian(4, seeded_rng(seed))
    assert np.linalg.norm(expm_hermitian(h, s) @ expm_hermitian(h, -s) - np.eye(4), 2) <= 1e-10


def test_haar_moments():
    r = seeded_rng(7)
    assert abs(abs(haar_unitary(1, r)[0, 0]) - 1) < 1e-14
    u00 = [abs(haar_unitary(2, r)[0, 0]) ** 2 for _ in range(100_000)]
    assert abs(np.mean(u00) - 0.5) <= 0.01
    tr = [abs(np.trace(haar_unitary(4, r))) ** 2 for _ in range(100_000)]
    assert abs(np.mean(tr) - 1.0) <= 0.05


def test_haar_determinism():
    a = haar_unitary(8, seeded_rng(99))
    b = haar_unitary(8, seeded_rng(99))
    assert np.array_equal(a, b)


def test_random_hermitian(rng):
    assert random_hermitian(1, rng).imag[0, 0] == 0
    h = random_hermitian(5, rng)
    assert np.array_equal(h, h.conj().T)
    r = seeded_rng(3)
    m = np.mean([np.trace(random_hermitian(4, r)).real / 4 for _ in range(100_000)])
    assert abs(m) <= 0.02


def test_streams_are_distinct():
    a = stream(5, 0).random(4)
    b = stream(5, 1).random(4)
    c = stream(5, 0).random(4)
    assert not np.array_equal(a, b) and np.array_equal(a, c)
    x, y = split_rng(5, 2)
    assert not np.array_equal(x.random(3), y.random(3))


def test_lanczos_diag():
    h = np.diag([3.0, -1.0, 2.0])
    e, v = lanczos_ground(lambda x: h @ x, 3)
    assert abs(e + 1) < 1e-12
    assert abs(abs(v[1]) - 1) < 1e-12


def test_lanczos_vs_dense_large(rng):
    for d in (100, 256):
        a = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        h = a + a.conj().T
        e, v = lanczos_ground(lambda x: h @ x, d)
        assert abs(e - np.linalg.eigvalsh(h)[0]) <= 1e-9 * max(1, abs(e))
        assert np.linalg.norm(h @ v - e * v) <= 1e-9 * max(1, abs(e))


def test_lanczos_nonconvergence_reports_residual(rng):
    d = 300
    a = rng.standard_normal((d, d))
    h = a + a.T
    with pytest.raises(ConvergenceError) as exc:
        lanczos_ground(lambda x: h @ x, d, maxiter=1)
    assert np.isfinite(exc.value.best_residual) and exc.value.best_residual > 1e-9
