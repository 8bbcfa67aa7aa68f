"""Variable-ansatz (VAns) structure search for unitary compiling.

Each proposal either inserts an identity-valued two-qubit gate or removes a
random gate, re-optimizes all gates with the environment sweep and runs the
greedy removal pass.  Inserted gates are optimized starting from a small
random kick away from the identity, which is a stationary point of the
fidelity objective for basis-state data.
The proposal is accepted with the Metropolis probability
min(1, exp(-(dR + Lambda * dG) / T_anneal)), dG being the change in gate
count; both the temperature and Lambda decay geometrically.
"""
from dataclasses import dataclass, field
import time

import numpy as np

from ..circuits import CircuitStructure, remove_slot, vans_insert, vans_remove
from .result import TrainResult, delta_distances
from .sweep import environment_sweep


@dataclass
class VansConfig:
    max_proposals: int = 10_000
    target_risk: float = 1e-8
    T0: float = 1e-3
    T_decay: float = 0.99
    lambda0: float = 1e-2
    lambda_decay: float = 0.995
    p_insert: float = 0.7
    insert_kick: float = 1e-2
    removal_threshold: float = 1e-6
    sweeps: int = 100
    inner_max: int = 2
    compress: bool = True
    compress_sweeps: int = 500
    sweep_rel_tol: float = 1e-7
    final_sweeps: int = 2000
    init_structure: object = None
    init_assignment: dict = field(default_factory=dict)
    reference: dict = None

    @classmethod
    def from_dict(cls, d):
        return cls(**{k: v for k, v in (d or {}).items() if k in cls.__dataclass_fields__})


def compiling_risk(c, a, psis, phis):
    from ..circuits import assignment_matrices, slot_matrix
    from ..numkit import apply_local
    mats = assignment_matrices(c, a)
    x = psis
    for s in c.slots:
        x = apply_local(x, c.n_qubits, slot_matrix(s, mats), s.qubits)
    z = np.einsum("ri,ri->i", phis.conj(), x)
    return float(max(0.0, 1.0 - np.mean(np.abs(z) ** 2)))


def _compress(c, a, r, optimize, cfg, rng, log, it0):
    tried = 0
    improved = cfg.compress
    while improved and c.slots and it0 + tried < cfg.max_proposals:
        improved = False
        for k in rng.permutation(len(c.slots)):
            c2, a2 = remove_slot(c, a, int(k))
            a2, r2 = optimize(c2, a2, cfg.compress_sweeps)
            tried += 1
            ok = r2 <= cfg.target_risk
            log.append({"iteration": it0 + tried - 1, "move": "compress", "accepted": bool(ok),
                        "risk": float(r2), "gates": c2.gate_count})
            if ok:
                c, a, r, improved = c2, a2, r2, True
                break
            if it0 + tried >= cfg.max_proposals:
                break
    return c, a, r, tried


def vans_optimize(psis, phis, config=None, rng=None, n_qubits=None):
    """Search structure and parameters for the pairs (psis[:, i], phis[:, i])."""
    cfg = config or VansConfig()
    t_start = time.perf_counter()
    psis = np.asarray(psis, dtype=complex)
    phis = np.asarray(phis, dtype=complex)
    if psis.ndim == 1:
        psis, phis = psis[:, None], phis[:, None]
    n = n_qubits or int(round(np.log2(psis.shape[0])))
    c = cfg.init_structure or CircuitStructure(n)
    a = dict(cfg.init_assignment)
    a_init = dict(a)

    def risk_fn(cc, aa):
        return compiling_risk(cc, aa, psis, phis)

    def optimize(cc, aa, sweeps):
        if not cc.slots:
            return aa, risk_fn(cc, aa)
        aa, tr = environment_sweep(cc, aa, psis, phis, sweeps=sweeps,
                                   target=cfg.target_risk * 1e-2, rel_tol=cfg.sweep_rel_tol,
                                   inner_max=cfg.inner_max)
        return aa, tr[-1]

    res = TrainResult()
    a, r = optimize(c, a, cfg.sweeps)
    res.risk_trace.append(r)
    best = (r, c.gate_count, c, a)
    temp, lam = cfg.T0, cfg.lambda0
    evals = 1
    it = 0
    while it < cfg.max_proposals:
        if best[0] <= cfg.target_risk:
            if it == 0:
                break  # the initial circuit already fits
            # compression: once the data are fit, look for a smaller circuit
            # that still fits by removing single gates and re-optimizing
            c, a, r, tried = _compress(best[2], best[3], best[0], optimize, cfg, rng, res.edit_log, it)
            it += tried
            best = (r, c.gate_count, c, a)
            res.risk_trace.append(r)
            break
        it += 1
        if not c.slots or rng.random() < cfg.p_insert:
            move = "insert"
            c2, a2 = vans_insert(c, a, rng)
            # the identity is a stationary point of the fidelity for some data
            # (e.g. basis states); the optimizer starts from a small kick
            g = max(a2)
            a2[g] = a2[g] + cfg.insert_kick * rng.standard_normal(a2[g].size)
        else:
            move = "remove"
            c2, a2 = remove_slot(c, a, int(rng.integers(0, len(c.slots))))
        a2, r2 = optimize(c2, a2, cfg.sweeps)
        # simplification: drop gates that no longer contribute
        n_before = c2.gate_count
        c2, a2 = vans_remove(c2, a2, risk_fn, cfg.removal_threshold)
        if c2.gate_count != n_before:
            a2, r2 = optimize(c2, a2, cfg.sweeps)
        evals += 1
        d_energy = (r2 - r) + lam * (c2.gate_count - c.gate_count)
        accept = d_energy <= 0 or (temp > 0 and rng.random() < np.exp(-d_energy / temp))
        res.edit_log.append({"iteration": it - 1, "move": move, "accepted": bool(accept),
                             "risk": float(r2), "gates": c2.gate_count})
        if accept:
            c, a, r = c2, a2, r2
            if (r, c.gate_count) < best[:2]:
                best = (r, c.gate_count, c, a)
        res.risk_trace.append(r)
        temp *= cfg.T_decay
        lam *= cfg.lambda_decay
    r, _, c, a = best
    if 0 < r and c.slots and cfg.final_sweeps:
        a, r = optimize(c, a, cfg.final_sweeps)
        res.risk_trace.append(r)
    res.structure, res.assignment = c, a
    res.deltas = delta_distances(c, a_init, a, cfg.reference)
    res.n_evals = evals
    res.wall_ms = 1e3 * (time.perf_counter() - t_start)
    return res
