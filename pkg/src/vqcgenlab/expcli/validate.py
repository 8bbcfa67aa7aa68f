"""Invariant suites behind ``vqcgenlab validate``.

Each suite draws from its own seeded stream and raises SuiteFailure with a
counterexample when an invariant breaks.  ``MUTATIONS`` holds deliberate
faults that the suites must catch (mutation testing of the harness itself).
"""
from contextlib import contextmanager
import time

import numpy as np
from scipy import stats

from .. import bounds, channels, circuits, numkit
from ..backends import (DenseState, HamiltonianSpec, cluster_dense, cluster_ground_state,
                        dense_apply_gate, mps_apply_gate, mps_from_dense, mps_random,
                        mps_sample_all, mps_to_dense, qcnn_forward_exact, qcnn_forward_sampled)
from ..learning import LossSpec, environment_sweep, shot_estimator


class SuiteFailure(AssertionError):
    def __init__(self, msg, counterexample=None):
        super().__init__(msg)
        self.counterexample = counterexample


def check(cond, msg, **example):
    if not cond:
        raise SuiteFailure(msg, {k: _show(v) for k, v in example.items()})


def _show(v):
    if isinstance(v, np.ndarray):
        if np.iscomplexobj(v):
            return {"re": np.round(v.real, 12).tolist(), "im": np.round(v.imag, 12).tolist()}
        return np.round(v, 12).tolist()
    if isinstance(v, (np.floating, float)):
        return float(v)
    return v


def _rand_near_pair(d, rng):
    u = numkit.haar_unitary(d, rng)
    if rng.random() < 0.5:
        return u, numkit.haar_unitary(d, rng)
    h = numkit.random_hermitian(d, rng)
    return u, u @ numkit.expm_hermitian(h, rng.uniform(0.01, 0.5))


def suite_polar(rng):
    for _ in range(200):
        m = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        q = numkit.polar_unitary(m)
        check(np.abs(q.conj().T @ q - np.eye(4)).max() < 1e-12, "polar factor not unitary", m=m)
        best = np.trace(q.conj().T @ m).real
        w = numkit.haar_unitary(4, rng)
        check(np.trace(w.conj().T @ m).real <= best + 1e-9, "polar factor not maximal", m=m, w=w)


def suite_expm(rng):
    from scipy.linalg import expm
    for _ in range(100):
        h = numkit.random_hermitian(4, rng)
        t = rng.uniform(-2, 2)
        check(np.abs(numkit.expm_hermitian(h, t) - expm(1j * t * h)).max() < 1e-10,
              "expm_hermitian disagrees with scipy", h=h, t=t)


def suite_diamond_range(rng):
    for _ in range(300):
        u, v = _rand_near_pair(int(rng.choice([2, 4])), rng)
        d = channels.diamond_distance_unitary(u, v)
        check(-1e-12 <= d <= 2 + 1e-12, "diamond distance outside [0, 2]", u=u, v=v, value=d)


def suite_diamond_oracle(rng):
    for _ in range(20):
        u, v = _rand_near_pair(int(rng.choice([2, 4])), rng)
        ex = channels.diamond_distance_unitary(u, v)
        lo, hi = channels.diamond_bracket(channels.KrausChannel.unitary(u),
                                          channels.KrausChannel.unitary(v), rng=rng)
        check(lo - 1e-6 <= ex <= hi + 1e-6 and abs(ex - lo) < 1e-5,
              "exact formula disagrees with the multi-restart ascent",
              u=u, v=v, exact=ex, ascent=lo, upper=hi)


def suite_diamond_lemmas(rng):
    for _ in range(500):
        d = int(rng.choice([2, 4]))
        a, c = _rand_near_pair(d, rng)
        b, e = _rand_near_pair(d, rng)
        dac = channels.diamond_distance_unitary(a, c)
        check(0.5 * dac <= channels.spectral_distance(a, c) + 1e-9,
              "half diamond exceeds spectral distance", u=a, v=c)
        lhs = channels.diamond_distance_unitary(a @ b, c @ e)
        check(lhs <= dac + channels.diamond_distance_unitary(b, e) + 1e-9,
              "diamond subadditivity violated", u1=a, v1=c, u2=b, v2=e)


def suite_qft(rng):
    for n in range(2, 7):
        u = circuits.unitary_of(circuits.build_qft(n), {})
        d = 2 ** n
        j = np.arange(d)
        f = np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)
        check(np.abs(u - f).max() < 1e-10, "QFT circuit differs from the DFT", n=n)


def suite_circuit_io(rng):
    for _ in range(10):
        c, a = circuits.CircuitStructure(3), {}
        for _ in range(int(rng.integers(0, 6))):
            c, a = circuits.vans_insert(c, a, rng)
        a = circuits.random_assignment(c, rng)
        c2, a2 = circuits.circuit_from_json(circuits.circuit_to_json(c, a))
        check(circuits.circuits_equal(c, a, c2, a2), "JSON round trip not exact",
              doc=circuits.circuit_to_json(c, a))


def suite_vans_insert(rng):
    c, a = circuits.to_trainable(circuits.build_qft(3))
    for _ in range(10):
        u0 = circuits.unitary_of(c, a)
        c, a = circuits.vans_insert(c, a, rng)
        check(np.abs(circuits.unitary_of(c, a) - u0).max() < 1e-12,
              "insertion changed the implemented unitary")


def suite_mps_dense(rng):
    for _ in range(20):
        n = int(rng.integers(2, 9))
        psi = numkit.haar_state(2 ** n, rng)
        s, dn = mps_from_dense(psi), DenseState(n, psi)
        for _ in range(10):
            k = 1 if n == 1 or rng.random() < 0.3 else 2
            sites = [int(x) for x in rng.choice(n, k, replace=False)]
            g = numkit.haar_unitary(2 ** k, rng)
            s, dn = mps_apply_gate(s, g, sites), dense_apply_gate(dn, g, sites)
        ov = abs(np.vdot(mps_to_dense(s), dn.amplitudes))
        check(ov > 1 - 1e-8, "MPS and dense states diverge", n=n, overlap=ov)


def suite_mps_sampling(rng):
    s = mps_random(5, 3, rng)
    p = np.abs(mps_to_dense(s)) ** 2
    draws = mps_sample_all(s, 200000, rng)
    idx = draws.astype(np.int64) @ (1 << np.arange(4, -1, -1))
    counts = np.bincount(idx, minlength=32)
    pv = stats.chisquare(counts, p * counts.sum()).pvalue
    check(pv > 1e-4, "perfect sampling fails chi-square", pvalue=pv)


def suite_cluster(rng):
    for _ in range(10):
        n = int(rng.integers(3, 9))
        j1, j2 = rng.uniform(-4, 4, 2)
        h = HamiltonianSpec(n, j1, j2)
        _, e = cluster_ground_state(h, return_energy=True)
        ex = np.linalg.eigvalsh(cluster_dense(h))[0]
        check(abs(e - ex) < 1e-9, "Lanczos energy differs from dense", n=n, J1=j1, J2=j2,
              lanczos=e, dense=ex)


def suite_qcnn(rng):
    c = circuits.build_qcnn(4)
    a = circuits.random_assignment(c, rng)
    s = DenseState(4, numkit.haar_state(16, rng))
    p = qcnn_forward_exact(s, c, a)
    check(abs(p.sum() - 1) < 1e-10, "QCNN probabilities do not sum to 1", p=p)
    counts = qcnn_forward_sampled(s, c, a, 200000, rng)
    pv = stats.chisquare(counts, p * counts.sum()).pvalue
    check(pv > 1e-4, "sampled QCNN frequencies disagree with the exact pass", p=p, counts=counts)


def suite_shot_estimator(rng):
    losses = rng.uniform(0, 1, 6)
    spec = LossSpec("compiling_fidelity")
    reps = [shot_estimator(None, None, spec, 2000, rng, losses=losses) for _ in range(400)]
    sd = np.sqrt(0.25 / 2000 / 400)
    check(abs(np.mean(reps) - losses.mean()) < 5 * sd, "shot estimator biased",
          losses=losses, mean=np.mean(reps))


def suite_sweep(rng):
    c, a = circuits.CircuitStructure(3), {}
    for _ in range(5):
        c, a = circuits.vans_insert(c, a, rng)
    a = circuits.random_assignment(c, rng)
    psis = np.column_stack([numkit.haar_state(8, rng) for _ in range(3)])
    phis = numkit.haar_unitary(8, rng) @ psis
    _, tr = environment_sweep(c, a, psis, phis, sweeps=10, trace_every_gate=True)
    check(np.all(np.diff(tr) <= 1e-10), "sweep risk increased", trace=np.array(tr))


def suite_bounds(rng):
    for _ in range(30):
        T = int(rng.integers(1, 10))
        N = int(rng.integers(1, 10 ** 5))
        M = tuple(int(x) for x in rng.integers(1, 20, T))
        D = tuple(sorted(rng.uniform(0, 2, T), reverse=True))
        q = bounds.BoundQuery(T=T, N=N, M_t=M, Delta_t=D, G_T=3, sigma_est=500)
        v = bounds.gen_bound_mother(q).value
        check(bounds.gen_bound_mother(q.with_(N=2 * N)).value < v, "bound not decreasing in N",
              T=T, N=N)
        check(bounds.gen_bound_mother(q.with_(sigma_est=1000)).value < v,
              "bound not decreasing in sigma_est", T=T, N=N)
        z = q.with_(Delta_t=(0.0,) * T, G_T=1, sigma_est=None)
        fixed = bounds.gen_bound_fixed(z.with_(Delta_t=None)).value
        check(abs(bounds.gen_bound_opt(z, force_K=T).value - fixed) < 1e-12,
              "opt(K=T) differs from fixed", T=T, N=N)
        check(bounds.gen_bound_mother(z).value == bounds.gen_bound_opt(z).value,
              "mother differs from opt without structure and shot terms", T=T, N=N)


def suite_net(rng):
    r = bounds.empirical_net_1qubit(0.5, 3000, rng)
    check(r.max_uncovered <= 0.5, "net leaves samples uncovered", max_uncovered=r.max_uncovered)
    check(r.size <= r.bound, "net larger than the covering bound", size=r.size)


SUITES = {
    "numkit.polar": suite_polar,
    "numkit.expm": suite_expm,
    "channels.diamond_range": suite_diamond_range,
    "channels.diamond_oracle": suite_diamond_oracle,
    "channels.diamond_lemmas": suite_diamond_lemmas,
    "circuits.qft": suite_qft,
    "circuits.json": suite_circuit_io,
    "circuits.vans_insert": suite_vans_insert,
    "backends.mps_dense": suite_mps_dense,
    "backends.mps_sampling": suite_mps_sampling,
    "backends.cluster": suite_cluster,
    "backends.qcnn": suite_qcnn,
    "learning.shot_estimator": suite_shot_estimator,
    "learning.sweep": suite_sweep,
    "bounds.chain_monotone": suite_bounds,
    "bounds.net": suite_net,
}


def _diamond_sign_error(u, v):
    a, b = channels._check_pair(u, v)
    lam = np.linalg.eigvals(a.conj().T @ b)
    r = min(1.0, channels.hull_distance_to_origin(lam / np.abs(lam)))
    return float(2.0 * np.sqrt(max(0.0, 1.0 + r * r)))


MUTATIONS = {"diamond_sign": (channels, "diamond_distance_unitary", _diamond_sign_error)}


@contextmanager
def mutated(names):
    saved = []
    try:
        for name in names:
            mod, attr, fn = MUTATIONS[name]
            saved.append((mod, attr, getattr(mod, attr)))
            setattr(mod, attr, fn)
        yield
    finally:
        for mod, attr, fn in reversed(saved):
            setattr(mod, attr, fn)


def run_validation(seed=0, mutations=(), only=None):
    """Run every suite; returns a list of result dicts in registry order."""
    results = []
    with mutated(mutations):
        for k, (name, fn) in enumerate(SUITES.items()):
            if only and name not in only:
                continue
            t0 = time.perf_counter()
            rec = {"suite": name, "passed": True, "message": "", "counterexample": None}
            try:
                fn(numkit.stream(seed, "validate", k))
            except SuiteFailure as exc:
                rec.update(passed=False, message=str(exc), counterexample=exc.counterexample)
            except Exception as exc:  # noqa: BLE001 - any crash is a failed suite
                rec.update(passed=False, message=f"{type(exc).__name__}: {exc}")
            rec["wall_ms"] = 1e3 * (time.perf_counter() - t0)
            results.append(rec)
    return results
