import numpy as np
import pytest

from vqcgenlab.backends import DenseState, mps_random, mps_to_dense, qcnn_forward_exact
from vqcgenlab.channels import CNOT, PAULI
from vqcgenlab.circuits import (CircuitStructure, GateSlot, build_qcnn, build_qft, gate_matrix,
                                params_from_unitary, perturb_near_solution, qft_matrix,
                                random_assignment, to_trainable, unitary_of, vans_insert)
from vqcgenlab.errors import ConvergenceError, UnsupportedShapeError, ValidationError
from vqcgenlab.learning import (CompilingModel, LabeledPair, LossSpec, QCNNModel, SPSAConfig,
                                VansConfig, compiling_risk, delta_distances, empirical_risk,
                                environment_sweep, gen_gap, haar_average_fidelity_loss,
                                loss_eval, min_prob_decode, phase_free_frobenius,
                                shot_estimator, spsa_minimize, vans_optimize)
from vqcgenlab.learning.sweep import optimize_gate
from vqcgenlab.numkit import haar_state, haar_unitary, seeded_rng

FID = LossSpec("compiling_fidelity")
SQ = LossSpec("compiling_sq_trace")
QL = LossSpec("qcnn_min_prob")


def test_loss_examples(rng):
    psi = haar_state(4, rng)
    assert loss_eval(FID, psi, LabeledPair(psi, psi)) < 1e-15
    e0, e1 = np.eye(4)[0], np.eye(4)[1]
    assert loss_eval(FID, e0, LabeledPair(e0, e1)) == 1
    assert loss_eval(SQ, e0, LabeledPair(e0, e1)) == 4
    assert loss_eval(QL, [1, 0, 0, 0], LabeledPair(e0, "00")) == 1
    with pytest.raises(ValidationError):
        loss_eval(QL, psi, LabeledPair(psi, psi))
    with pytest.raises(ValidationError):
        loss_eval(FID, [1, 0, 0, 0][:1], LabeledPair(psi, "00"))
    with pytest.raises(ValidationError):
        LossSpec("nope")
    with pytest.raises(ValidationError):
        LossSpec("compiling_sq_trace", C_loss=1.0)
    assert (FID.C_loss, SQ.C_loss, QL.C_loss) == (1.0, 4.0, 1.0)


def test_sq_trace_is_four_times_fidelity(rng):
    for _ in range(100):
        a, b = haar_state(8, rng), haar_state(8, rng)
        p = LabeledPair(a, b)
        assert abs(loss_eval(SQ, a, p) - 4 * loss_eval(FID, a, p)) < 1e-12


class _Fixed:
    """Model whose per-pair output is looked up by input index."""

    def __init__(self, outs):
        self.outs = outs

    def __call__(self, x):
        return self.outs[int(np.asarray(x).real[0])]


def test_empirical_risk_examples(rng):
    e0, e1 = np.eye(2)
    pairs = [LabeledPair(np.array([0.0]), e0), LabeledPair(np.array([1.0]), e0)]
    assert empirical_risk(pairs, _Fixed([e0, e0]), FID) == 0
    assert empirical_risk(pairs, _Fixed([e0, e1]), FID) == 0.5
    with pytest.raises(ValidationError):
        empirical_risk([], _Fixed([]), FID)
    c, _ = to_trainable(build_qft(3))
    c, a = to_trainable(build_qft(3))
    u = unitary_of(c, a)
    data = [LabeledPair(x, u @ x) for x in (haar_state(8, rng) for _ in range(5))]
    assert empirical_risk(data, CompilingModel(c, a), FID) < 1e-10


def test_gen_gap(rng):
    c, a = to_trainable(build_qft(3))
    u = qft_matrix(3)
    model = CompilingModel(c, a)
    tr = [LabeledPair(x, u @ x) for x in (haar_state(8, rng) for _ in range(3))]
    te = [LabeledPair(x, u @ x) for x in (haar_state(8, rng) for _ in range(3))]
    rep = gen_gap(tr, te, model, FID)
    assert abs(rep.gap) < 1e-10 and rep.gap == rep.test_estimate - rep.empirical
    # a memorizer: V maps the single training input to its target and nothing else
    x = haar_state(8, rng)
    y = u @ x
    v = np.eye(8) - np.outer(x, x.conj()) + np.outer(y, x.conj())
    # complete to a unitary: reflection through (x - y) up to phase
    w = x - y * np.vdot(y, x) / abs(np.vdot(y, x))
    w /= np.linalg.norm(w)
    v = (np.eye(8) - 2 * np.outer(w, w.conj())) * (np.vdot(y, x) / abs(np.vdot(y, x))).conjugate()
    assert abs(abs(np.vdot(y, v @ x)) - 1) < 1e-12

    class M:
        def __call__(self, s):
            return v @ s
    test = [LabeledPair(z, u @ z) for z in (haar_state(8, rng) for _ in range(20))]
    rep = gen_gap([LabeledPair(x, y)], test, M(), FID)
    assert rep.empirical < 1e-12 and rep.gap > 0.1


def test_shot_estimator(rng):
    e0 = np.eye(2)[0]
    pairs = [LabeledPair(np.array([float(i)]), e0) for i in range(3)]
    zero = _Fixed([e0] * 3)
    one = _Fixed([np.eye(2)[1]] * 3)
    assert shot_estimator(pairs, zero, SQ, 1000, rng) == 0
    assert shot_estimator(pairs, one, SQ, 1000, rng) == 4
    mixed = _Fixed([e0, np.eye(2)[1], np.array([1, 1]) / np.sqrt(2)])
    exact = empirical_risk(pairs, mixed, SQ)
    est = shot_estimator(pairs, mixed, SQ, 10 ** 5, rng)
    assert abs(est - exact) <= 3 * SQ.C_loss / np.sqrt(1e5)
    with pytest.raises(ValidationError):
        shot_estimator(pairs, mixed, SQ, 0, rng)


def test_shot_estimator_unbiased(rng):
    losses = np.array([0.1, 0.7, 0.25, 0.9])
    reps = np.array([shot_estimator(None, None, FID, 10 ** 4, rng, losses=losses)
                     for _ in range(200)])
    exact = losses.mean()
    sd = np.sqrt(exact * (1 - exact) / 1e4) / np.sqrt(200)
    assert abs(reps.mean() - exact) < 4 * sd


def test_min_prob_decode():
    assert min_prob_decode([8192, 0, 0, 0]) == "01"
    assert min_prob_decode([10, 2000, 3000, 3182]) == "00"
    with pytest.raises(ValidationError):
        min_prob_decode([0, 0, 0, 0])


def test_decode_matches_exact_argmin(rng):
    c = build_qcnn(4)
    a = random_assignment(c, rng)
    model = QCNNModel(c, a)
    for _ in range(10):
        s = DenseState(4, haar_state(16, rng))
        p = qcnn_forward_exact(s, c, a)
        losses = [loss_eval(QL, p, LabeledPair(s, format(k, "02b"))) for k in range(4)]
        assert min_prob_decode(p) == format(int(np.argmin(losses)), "02b")
        assert np.allclose(model(s), p)


def test_haar_average_fidelity_loss(rng):
    u, v = haar_unitary(4, rng), haar_unitary(4, rng)
    mc = np.mean([1 - abs(np.vdot(x, u.conj().T @ v @ x)) ** 2
                  for x in (haar_state(4, rng) for _ in range(20000))])
    assert abs(haar_average_fidelity_loss(u, v) - mc) < 0.01
    assert abs(haar_average_fidelity_loss(u, np.exp(0.3j) * u)) < 1e-12
    assert abs(phase_free_frobenius(u, np.exp(0.3j) * u)) < 1e-12


# --- SPSA -----------------------------------------------------------------

def test_spsa_quadratic(rng):
    theta0 = rng.uniform(-1, 1, 8)
    res = spsa_minimize(lambda t: float(t @ t), theta0, SPSAConfig(max_iter=2000), rng)
    assert res.theta @ res.theta < 1e-3
    assert res.n_evals == 4000


def test_spsa_constant_and_determinism():
    res = spsa_minimize(lambda t: 3.0, np.ones(4), SPSAConfig(max_iter=50), seeded_rng(1))
    assert np.allclose(res.theta, 1) and set(res.risk_trace) == {3.0}
    f = lambda t: float(np.sum(np.cos(t)))  # noqa: E731
    r1 = spsa_minimize(f, np.zeros(5), SPSAConfig(max_iter=100), seeded_rng(7))
    r2 = spsa_minimize(f, np.zeros(5), SPSAConfig(max_iter=100), seeded_rng(7))
    assert r1.risk_trace == r2.risk_trace


def test_spsa_nonfinite():
    with pytest.raises(ConvergenceError) as e:
        spsa_minimize(lambda t: np.nan, np.zeros(2), SPSAConfig(max_iter=5), seeded_rng(0))
    assert e.value.trace == []


def test_spsa_shot_schedule():
    seen = []

    def f(t, shots):
        seen.append(shots)
        return 1.0
    spsa_minimize(f, np.zeros(2), SPSAConfig(max_iter=120, shots0=100, patience=50), seeded_rng(0))
    assert seen[0] == 100 and 400 in seen and 1600 in seen
    assert all(b >= a for a, b in zip(seen, seen[1:]))


def test_spsa_snapshots():
    res = spsa_minimize(lambda t: float(t @ t), np.ones(2),
                        SPSAConfig(max_iter=30, snapshot_every=10), seeded_rng(0),
                        callback=lambda k, th, sh: (k, th))
    assert [s[0] for s in res.snapshots] == [9, 19, 29]


# --- environment sweep ----------------------------------------------------

def test_sweep_single_gate_basis(rng):
    target = haar_unitary(4, rng)
    c = CircuitStructure(2, [GateSlot(0, (0, 1), "trainable", group=0)])
    a = {0: rng.uniform(-1, 1, 15)}
    psis = np.eye(4, dtype=complex)
    a2, tr = environment_sweep(c, a, psis, target @ psis, sweeps=50)
    assert tr[-1] < 1e-10
    assert np.all(np.diff(tr) <= 1e-12)


def test_sweep_fixed_point(rng):
    c, a = to_trainable(build_qft(3))
    psis = np.column_stack([haar_state(8, rng) for _ in range(3)])
    phis = unitary_of(c, a) @ psis
    a2, tr = environment_sweep(c, a, psis, phis, sweeps=3, target=-1)
    assert abs(tr[-1] - tr[0]) < 1e-12


def test_sweep_near_solution_qft3(rng):
    c, a = to_trainable(build_qft(3))
    a_pert = perturb_near_solution(c, a, 0.1, rng)
    psis = np.column_stack([mps_to_dense(mps_random(3, 2, rng)) for _ in range(2)])
    phis = qft_matrix(3) @ psis
    a2, tr = environment_sweep(c, a_pert, psis, phis, sweeps=200, target=0)
    assert tr[-1] < 1e-8
    assert len(tr) <= 201


def test_sweep_monotone_per_gate(rng):
    c, a = CircuitStructure(3), {}
    for _ in range(6):
        c, a = vans_insert(c, a, rng)
    a = random_assignment(c, rng)
    psis = np.column_stack([haar_state(8, rng) for _ in range(3)])
    phis = haar_unitary(8, rng) @ psis
    _, tr = environment_sweep(c, a, psis, phis, sweeps=20, trace_every_gate=True)
    assert np.all(np.diff(tr) <= 1e-10)


def test_optimize_gate_monotone(rng):
    m = rng.standard_normal((5, 4, 4)) + 1j * rng.standard_normal((5, 4, 4))
    u, before, after = optimize_gate(m, haar_unitary(4, rng), inner_max=200)
    assert after >= before


def test_sweep_rejects(rng):
    q = build_qcnn(4)
    with pytest.raises(UnsupportedShapeError):
        environment_sweep(q, random_assignment(q, rng), np.eye(16), np.eye(16))
    shared = CircuitStructure(2, [GateSlot(0, (0, 1), "trainable", group=0),
                                  GateSlot(1, (0, 1), "trainable", group=0)])
    with pytest.raises(UnsupportedShapeError):
        environment_sweep(shared, {0: np.zeros(15)}, np.eye(4), np.eye(4))


# --- VAns -----------------------------------------------------------------

def test_vans_identity_target(rng):
    psis = np.column_stack([haar_state(8, rng) for _ in range(2)])
    res = vans_optimize(psis, psis, VansConfig(max_proposals=50), rng)
    assert res.structure.gate_count == 0 and res.final_risk < 1e-12
    assert res.edit_log == []


def test_vans_cnot_target(rng):
    psis = np.eye(4, dtype=complex)
    res = vans_optimize(psis, CNOT @ psis, VansConfig(max_proposals=200), rng)
    assert res.final_risk < 1e-8 and res.structure.gate_count == 1
    assert res.deltas and all(0 <= d <= 2 + 1e-12 for d in res.deltas)


def test_vans_zero_temperature_acceptance():
    r = seeded_rng(3)
    psis = np.column_stack([haar_state(8, r) for _ in range(2)])
    phis = haar_unitary(8, r) @ psis
    cfg = VansConfig(max_proposals=40, T0=0.0, lambda0=1e-3, sweeps=20)
    res = vans_optimize(psis, phis, cfg, r)
    cur_r, cur_g = res.risk_trace[0], 0
    lam = cfg.lambda0
    violations = 0
    for e in res.edit_log:
        if e["move"] == "compress":
            continue
        d = (e["risk"] - cur_r) + lam * (e["gates"] - cur_g)
        if e["accepted"]:
            violations += d > 1e-15
            cur_r, cur_g = e["risk"], e["gates"]
        lam *= cfg.lambda_decay
    assert violations == 0


def test_vans_qft3_basis_training():
    u = qft_matrix(3)
    psis = np.eye(8, dtype=complex)
    ok = False
    for seed in range(8):
        res = vans_optimize(psis, u @ psis, VansConfig(max_proposals=10 ** 4), seeded_rng(seed))
        if compiling_risk(res.structure, res.assignment, psis, u @ psis) < 1e-8:
            ok = True
            break
    assert ok


def test_delta_distances(rng):
    c, a = to_trainable(build_qft(3))
    assert delta_distances(c, a, a) == pytest.approx([0.0] * c.T, abs=1e-6)
    c1 = CircuitStructure(1, [GateSlot(0, (0,), "trainable", group=0)])
    z = {0: params_from_unitary(PAULI["Z"])}
    ds = delta_distances(c1, {0: np.zeros(3)}, z)
    assert abs(ds[0] - 2) < 1e-9
    a2 = random_assignment(c, rng)
    ds = delta_distances(c, a, a2)
    assert all(0 <= d <= 2 + 1e-12 for d in ds) and ds == sorted(ds, reverse=True)
    # global phase of the reference does not matter
    ref = {g: np.exp(0.4j) * gate_matrix(a[g]) for g in a}
    assert np.allclose(delta_distances(c, a, a2, reference=ref), ds, atol=1e-9)
    with pytest.raises(ValidationError):
        delta_distances(c, a, {0: np.zeros(15)})
