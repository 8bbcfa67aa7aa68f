
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import stats

from vqcgenlab.backends import (DenseState, HamiltonianSpec, basis_state, cluster_dense,
                                cluster_ground_state, cluster_matvec, dense_apply_gate,
                                dense_probabilities, dense_sample, mps_apply_gate, mps_from_dense,
                                mps_overlap, mps_product, mps_random, mps_sample_all,
                                mps_sample_perfect, mps_to_dense, qcnn_forward_exact,
                                qcnn_forward_sampled)
from vqcgenlab.backends.mps import mps_norm
from vqcgenlab.channels import CNOT, HADAMARD, PAULI, UnitaryGate
from vqcgenlab.circuits import build_qcnn, random_assignment, zero_assignment
from vqcgenlab.errors import CapacityError, UnsupportedShapeError, ValidationError
from vqcgenlab.numkit import haar_state, haar_unitary, seeded_rng

from oracles import branch_enumeration, embed


def chi2_p(counts, probs):
    counts = np.asarray(counts, dtype=float)
    exp = probs * counts.sum()
    keep = exp > 5
    obs = np.append(counts[keep], counts[~keep].sum())
    ex = np.append(exp[keep], exp[~keep].sum())
    if ex[-1] == 0:
        obs, ex = obs[:-1], ex[:-1]
    return stats.chisquare(obs, ex).pvalue


# --- dense ----------------------------------------------------------------

def test_dense_examples(rng):
    s = dense_apply_gate(basis_state(1, 0), UnitaryGate(PAULI["X"]), [0])
    assert np.allclose(s.amplitudes, [0, 1])
    s = dense_apply_gate(basis_state(2, 2), UnitaryGate(CNOT), [0, 1])
    assert np.allclose(s.amplitudes, [0, 0, 0, 1])
    psi = haar_state(64, rng)
    for sites in [(0, 1), (4, 2), (5, 0), (3,)]:
        g = haar_unitary(2 ** len(sites), rng)
        out = dense_apply_gate(DenseState(6, psi), g, sites)
        assert np.abs(out.amplitudes - embed(g, sites, 6) @ psi).max() < 1e-12
        assert abs(np.linalg.norm(out.amplitudes) - 1) < 1e-12


def test_dense_errors():
    s = basis_state(2, 0)
    with pytest.raises(ValidationError):
        dense_apply_gate(s, CNOT, [1, 1])
    with pytest.raises(ValidationError):
        DenseState(1, np.array([1, 1]))
    with pytest.raises(ValidationError):
        dense_sample(s, 0, seeded_rng(0))


def test_dense_sample(rng):
    assert dense_sample(basis_state(2, 0), 100, rng) == {"00": 100}
    plus = DenseState(1, np.array([1, 1]) / np.sqrt(2))
    c = dense_sample(plus, 10 ** 5, rng)
    assert abs(c["0"] - 50000) <= 500 and abs(c["1"] - 50000) <= 500
    s = DenseState(3, haar_state(8, rng))
    c = dense_sample(s, 10 ** 6, rng)
    counts = [c.get(format(i, "03b"), 0) for i in range(8)]
    assert chi2_p(counts, dense_probabilities(s)) > 1e-3


# --- MPS ------------------------------------------------------------------

def test_mps_random(rng):
    s = mps_random(5, 1, rng)
    assert all(b == 1 for b in s.bonds)
    s = mps_random(6, 2, rng)
    assert abs(mps_overlap(s, s) - 1) < 1e-10
    s = mps_random(8, 2, rng)
    psi = mps_to_dense(s).reshape(16, 16)
    sv = np.linalg.svd(psi, compute_uv=False) ** 2
    sv = sv[sv > 1e-16]
    assert -np.sum(sv * np.log(sv)) <= np.log(2) + 1e-10
    assert max(mps_random(10, 64, rng).bonds) == 32
    with pytest.raises(ValidationError):
        mps_random(4, 0, rng)


def test_mps_two_qubit_examples(rng):
    s = mps_random(5, 3, rng)
    s2 = mps_apply_gate(s, np.eye(4), [1, 2])
    assert np.abs(mps_to_dense(s2) - mps_to_dense(s)).max() < 1e-12
    assert s2.trunc_err == s.trunc_err
    bell = mps_apply_gate(mps_apply_gate(mps_product([0, 0]), HADAMARD, [0]), CNOT, [0, 1], chi_max=1)
    assert abs(bell.trunc_err - 0.5) < 1e-12


def test_mps_matches_dense_random_circuit(rng):
    for n in (4, 7, 10):
        psi = haar_state(2 ** n, rng)
        s = mps_from_dense(psi)
        dense = DenseState(n, psi)
        errs = []
        for _ in range(25):
            k = 1 + int(rng.random() < 0.8)
            sites = [int(x) for x in rng.choice(n, k, replace=False)]
            g = haar_unitary(2 ** k, rng)
            s = mps_apply_gate(s, g, sites)
            dense = dense_apply_gate(dense, g, sites)
            errs.append(s.trunc_err)
        assert np.abs(mps_to_dense(s) - dense.amplitudes).max() < 1e-10
        assert abs(abs(mps_overlap(s, mps_from_dense(dense.amplitudes))) - 1) < 1e-8
        assert errs[-1] < 1e-20


def test_trunc_err_monotone(rng):
    s = mps_random(8, 2, rng, chi_max=3)
    errs = [s.trunc_err]
    for _ in range(30):
        i = int(rng.integers(0, 7))
        s = mps_apply_gate(s, haar_unitary(4, rng), [i, i + 1])
        errs.append(s.trunc_err)
        assert max(s.bonds) <= 3
        assert abs(mps_norm(s) - 1) < 1e-8
    assert np.all(np.diff(errs) >= 0) and errs[-1] > 0


def test_mps_overlap(rng):
    a = mps_random(8, 3, rng)
    b = mps_random(8, 3, rng)
    assert abs(mps_overlap(a, a) - 1) < 1e-10
    assert abs(mps_overlap(mps_product([0, 1, 0]), mps_product([0, 1, 1]))) == 0
    assert abs(mps_overlap(a, b) - np.vdot(mps_to_dense(a), mps_to_dense(b))) < 1e-10
    with pytest.raises(ValidationError):
        mps_overlap(a, mps_random(7, 2, rng))


def test_mps_sample_examples(rng):
    for _ in range(20):
        assert mps_sample_perfect(mps_product([0, 1]), [0, 1], rng)[0] == "01"
    ghz = mps_from_dense(np.r_[1, np.zeros(14), 1] / np.sqrt(2))
    draws = mps_sample_all(ghz, 10 ** 5, rng)
    assert abs(draws[:, 0].mean() - 0.5) < 0.01
    assert np.all(draws.min(axis=1) == draws.max(axis=1))
    ones = sum(mps_sample_perfect(ghz, [0], rng)[0] == "1" for _ in range(4000))
    assert abs(ones / 4000 - 0.5) < 0.03


def test_mps_sample_perfect_collapse(rng):
    psi = haar_state(16, rng)
    s = mps_from_dense(psi)
    bits, post = mps_sample_perfect(s, [1, 3], rng)
    t = psi.reshape(2, 2, 2, 2)[:, int(bits[0]), :, int(bits[1])].ravel()
    t /= np.linalg.norm(t)
    assert post.n == 2
    assert abs(abs(np.vdot(t, mps_to_dense(post))) - 1) < 1e-10


def test_mps_sample_chi_square(rng):
    s = mps_random(6, 4, rng)
    probs = np.abs(mps_to_dense(s)) ** 2
    draws = mps_sample_all(s, 10 ** 6, rng)
    idx = draws.astype(np.int64) @ (1 << np.arange(5, -1, -1))
    assert chi2_p(np.bincount(idx, minlength=64), probs) > 1e-3
    # the per-shot sampler against the same distribution
    idx = [int(mps_sample_perfect(s, range(6), rng)[0], 2) for _ in range(20000)]
    assert chi2_p(np.bincount(idx, minlength=64), probs) > 1e-3


# --- cluster Hamiltonian --------------------------------------------------

def cluster_oracle(n, j1, j2):
    x, z = PAULI["X"], PAULI["Z"]
    h = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for j in range(n):
        h += embed(z, [j], n)
        h -= j1 * embed(np.kron(x, x), [j, (j + 1) % n], n)
        h -= j2 * embed(np.kron(np.kron(x, z), x), [(j - 1) % n, j, (j + 1) % n], n)
    return h


@pytest.mark.parametrize("j1,j2,n", [(0, 0, 4), (4, 0, 4), (0, 4, 6), (1.3, -0.7, 5)])
def test_cluster_dense_oracle(j1, j2, n):
    h = HamiltonianSpec(n, j1, j2)
    assert np.abs(cluster_dense(h) - cluster_oracle(n, j1, j2)).max() < 1e-12
    st_, e = cluster_ground_state(h, return_energy=True)
    e_exact = np.linalg.eigvalsh(cluster_oracle(n, j1, j2))[0]
    assert abs(e - e_exact) < 1e-9
    rq = np.vdot(st_.amplitudes, cluster_dense(h) @ st_.amplitudes).real
    assert abs(rq - e_exact) < 1e-9


def test_cluster_trivial_point():
    st_, e = cluster_ground_state(HamiltonianSpec(4, 0, 0), return_energy=True)
    assert abs(e + 4) < 1e-12
    assert abs(abs(st_.amplitudes[15]) - 1) < 1e-10


def test_cluster_validation():
    with pytest.raises(ValidationError):
        HamiltonianSpec(2, 0.0, 1.0)
    with pytest.raises(CapacityError):
        cluster_ground_state(HamiltonianSpec(18, 1.0, 1.0))


@settings(max_examples=15, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.integers(0, 2 ** 31))
def test_cluster_variational_and_translation(j1, j2, seed):
    h = HamiltonianSpec(6, j1, j2)
    _, e0 = cluster_ground_state(h, return_energy=True)
    r = seeded_rng(seed)
    mv = cluster_matvec(h)
    for _ in range(5):
        v = haar_state(64, r)
        assert np.vdot(v, mv(v)).real >= e0 - 1e-9
    for shift in (1, 3):
        e_shift = np.linalg.eigvalsh(np.column_stack([cluster_matvec(h, shift)(e)
                                                      for e in np.eye(64)]))[0]
        assert abs(e_shift - e0) < 1e-9


def test_cluster_n12_sparse_path():
    h = HamiltonianSpec(12, 1.0, 0.5)
    st_, e = cluster_ground_state(h, return_energy=True)
    v = st_.amplitudes
    assert np.linalg.norm(cluster_matvec(h)(v) - e * v) < 1e-6


# --- QCNN forward ---------------------------------------------------------

def test_qcnn_exact_examples(rng):
    c = build_qcnn(4)
    p = qcnn_forward_exact(basis_state(4, 0), c, zero_assignment(c))
    assert np.allclose(p, [1, 0, 0, 0])
    for n in (4, 8):
        c = build_qcnn(n)
        for _ in range(3):
            a = random_assignment(c, rng)
            s = DenseState(n, haar_state(2 ** n, rng))
            p = qcnn_forward_exact(s, c, a)
            assert abs(p.sum() - 1) < 1e-10
            assert np.abs(p - branch_enumeration(s.amplitudes, c, a)).max() < 1e-12
    with pytest.raises(UnsupportedShapeError):
        from vqcgenlab.circuits import CircuitStructure
        qcnn_forward_exact(basis_state(2, 0), CircuitStructure(2), {})


def test_qcnn_sampled(rng):
    c = build_qcnn(4)
    cnt = qcnn_forward_sampled(basis_state(4, 0), c, zero_assignment(c), 1000, rng)
    assert list(cnt) == [1000, 0, 0, 0]
    a = random_assignment(c, rng)
    s = DenseState(4, haar_state(16, rng))
    p = qcnn_forward_exact(s, c, a)
    shots = 10 ** 6
    cnt = qcnn_forward_sampled(s, c, a, shots, rng)
    sigma = np.sqrt(shots * p * (1 - p))
    assert np.all(np.abs(cnt - shots * p) <= 3 * sigma + 1)


def test_qcnn_mps_vs_dense(rng):
    n = 8
    c = build_qcnn(n)
    a = random_assignment(c, rng)
    psi = haar_state(2 ** n, rng)
    p = qcnn_forward_exact(DenseState(n, psi), c, a)
    shots = 3000
    cm = qcnn_forward_sampled(mps_from_dense(psi), c, a, shots, rng)
    cd = qcnn_forward_sampled(DenseState(n, psi), c, a, shots, rng)
    assert cm.sum() == cd.sum() == shots
    # two-sample homogeneity and agreement with the exact law
    table = np.vstack([cm, cd])
    table = table[:, table.sum(axis=0) > 0]
    assert stats.chi2_contingency(table)[1] > 1e-3
    assert chi2_p(cm, p) > 1e-3
