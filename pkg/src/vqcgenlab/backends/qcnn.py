"""QCNN forward passes: exact outcome distribution and shot sampling.

The exact pass uses deferred measurement: "measure qubit m, then apply U0 or
U1 to target t" equals the controlled gate |0><0| (x) U0 + |1><1| (x) U1 on
(m, t) followed by measuring m at the end.  Measured qubits are never touched
again, so the 2-qubit output marginal of the final state is the exact
branch-averaged distribution.
"""
import numpy as np

from ..circuits import assignment_matrices, slot_matrix
from ..errors import CapacityError, UnsupportedShapeError
from ..numkit import apply_local
from .dense import DenseState
from .mps import MPSState, mps_apply_gate, mps_apply_one_qubit, mps_sample_perfect


def _segments(c):
    """[(slot range, pool layer or None)] in execution order."""
    out, start = [], 0
    for p in c.pooling:
        out.append((range(start, p.after), p))
        start = p.after
    out.append((range(start, len(c.slots)), None))
    return out


def output_qubits(c):
    if not c.pooling:
        raise UnsupportedShapeError("structure has no pooling plan")
    active = list(range(c.n_qubits))
    for p in c.pooling:
        active = [q for q in active if q not in p.measured]
    return active


def controlled_pair(u0, u1):
    m = np.zeros((4, 4), dtype=complex)
    m[:2, :2] = u0
    m[2:, 2:] = u1
    return m


def qcnn_forward_exact(s, c, a, mats=None):
    """Probabilities of the 4 outcomes 00, 01, 10, 11 of the output pair."""
    if not c.pooling:
        raise UnsupportedShapeError("qcnn_forward_exact needs a pooling plan")
    if c.n_qubits > 12:
        raise CapacityError("exact QCNN forward supports n <= 12")
    amp = s.amplitudes if isinstance(s, DenseState) else np.asarray(s)
    return qcnn_forward_exact_batch(amp[:, None], c, a, mats)[:, 0]


def qcnn_forward_exact_batch(psis, c, a, mats=None):
    """Exact output distributions for a batch of states (columns of ``psis``)."""
    n = c.n_qubits
    mats = assignment_matrices(c, a) if mats is None else mats
    psi = np.array(psis, dtype=complex)
    for seg, p in _segments(c):
        for i in seg:
            sl = c.slots[i]
            psi = apply_local(psi, n, slot_matrix(sl, mats), sl.qubits)
        if p is not None:
            cu = controlled_pair(mats[p.group0], mats[p.group1])
            for m, t in zip(p.measured, p.targets):
                psi = apply_local(psi, n, cu, (m, t))
    out = output_qubits(c)
    prob = (np.abs(psi) ** 2).reshape((2,) * n + (psi.shape[1],))
    drop = tuple(q for q in range(n) if q not in out)
    prob = prob.sum(axis=drop).reshape(4, -1)
    return prob / prob.sum(axis=0, keepdims=True)


def _project_drop(psi, pos, measured, bits):
    """Project ``psi`` (tensor with one axis per live qubit) onto ``bits`` for
    ``measured`` and delete those axes.  Returns (psi, new pos map)."""
    index = [slice(None)] * psi.ndim
    for q, b in zip(measured, bits):
        index[pos[q]] = b
    psi = psi[tuple(index)]
    live = sorted((k for k in pos if k not in measured), key=pos.get)
    return psi, {q: i for i, q in enumerate(live)}


def _dense_sampled(psi, pos, c, mats, seg_list, shots, rng, counts):
    """Recursive branch sampler; ``psi`` tensor over live qubits (pos map)."""
    (seg, p), rest = seg_list[0], seg_list[1:]
    nlive = psi.ndim
    flat = psi.reshape(-1)
    for i in seg:
        sl = c.slots[i]
        flat = apply_local(flat, nlive, slot_matrix(sl, mats), [pos[q] for q in sl.qubits])
    psi = flat.reshape((2,) * nlive)
    if p is None:
        prob = np.abs(psi.reshape(-1)) ** 2
        counts += rng.multinomial(shots, prob / prob.sum())
        return
    # joint distribution of the measured qubits of this layer
    prob = np.abs(psi) ** 2
    axes_m = [pos[q] for q in p.measured]
    other = tuple(k for k in range(nlive) if k not in axes_m)
    pm = prob.sum(axis=other)
    pm = np.transpose(pm, np.argsort(np.argsort(axes_m))).reshape(-1)
    branch = rng.multinomial(shots, pm / pm.sum())
    k = len(p.measured)
    for idx in np.nonzero(branch)[0]:
        bits = [(idx >> (k - 1 - j)) & 1 for j in range(k)]
        sub, npos = _project_drop(psi, pos, p.measured, bits)
        sub = sub / np.linalg.norm(sub)
        flat = sub.reshape(-1)
        for b, t in zip(bits, p.targets):
            u = mats[p.group1] if b else mats[p.group0]
            flat = apply_local(flat, sub.ndim, u, [npos[t]])
        _dense_sampled(flat.reshape(sub.shape), npos, c, mats, rest, int(branch[idx]), rng, counts)


def qcnn_forward_sampled(s, c, a, shots, rng, chi_max=None):
    """Outcome counts (array over 00, 01, 10, 11) from ``shots`` runs.

    Dense input: shots are grouped per measurement branch with multinomial
    draws, which is distributionally identical to per-shot simulation.  MPS
    input: each shot is simulated with perfect sampling of the pooled qubits;
    the deterministic prefix before the first measurement is shared.
    """
    if not c.pooling:
        raise UnsupportedShapeError("qcnn_forward_sampled needs a pooling plan")
    mats = assignment_matrices(c, a)
    counts = np.zeros(4, dtype=np.int64)
    segs = _segments(c)
    if isinstance(s, MPSState):
        _mps_sampled(s, c, mats, segs, int(shots), rng, counts, chi_max)
        return counts
    n = c.n_qubits
    psi = (s.amplitudes if isinstance(s, DenseState) else np.asarray(s)).reshape((2,) * n)
    _dense_sampled(psi, {q: q for q in range(n)}, c, mats, segs, int(shots), rng, counts)
    return counts


def _mps_run(st, pos, c, mats, seg, chi_max):
    for i in seg:
        sl = c.slots[i]
        st = mps_apply_gate(st, slot_matrix(sl, mats), [pos[q] for q in sl.qubits], chi_max)
    return st


def _mps_sampled(s, c, mats, segs, shots, rng, counts, chi_max):
    pos0 = {q: q for q in range(c.n_qubits)}
    first, rest = segs[0], segs[1:]
    prefix = _mps_run(s, pos0, c, mats, first[0], chi_max)
    for _ in range(shots):
        st, pos, p = prefix, dict(pos0), first[1]
        for seg, nxt in rest + [(None, None)]:
            if p is None:
                break
            bits, st = mps_sample_perfect(st, [pos[q] for q in p.measured], rng)
            # measured sites are removed; relabel the survivors
            live = sorted((q for q in pos if q not in p.measured), key=pos.get)
            pos = {q: i for i, q in enumerate(live)}
            order = sorted(p.measured, key=lambda q: q)
            outcome = dict(zip(order, bits))
            for m, t in zip(p.measured, p.targets):
                u = mats[p.group1] if outcome[m] == "1" else mats[p.group0]
                st = mps_apply_one_qubit(st, u, pos[t])
            st = _mps_run(st, pos, c, mats, seg, chi_max)
            p = nxt
        out = sorted(pos, key=pos.get)
        bits, _ = mps_sample_perfect(st, [pos[q] for q in out], rng)
        counts[int(bits, 2)] += 1
