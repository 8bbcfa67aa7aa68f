"""Environment-sweep optimizer for unitary compiling.

For gate k write the training overlaps as z_i = <phi_i|V|psi_i> = tr(u_k M_i),
where M_i = A_i B_i^dag is built from the state before the gate (A) and the
target propagated backwards through the later gates (B), both with the gate
qubits as leading index.  The objective sum_i |z_i|^2 is minorized at the
current u by 2 Re(sum_i conj(z_i) tr(u M_i)) - sum_i |z_i|^2, which is
maximized by u = polar(F)^dag with F = sum_i conj(z_i) M_i.  Iterating this
step never decreases the objective.
"""
import numpy as np

from ..circuits import assignment_matrices, params_from_unitary
from ..errors import UnsupportedShapeError, ValidationError
from ..numkit import apply_local


def _to_front(x, n, qubits):
    """(2^n, N) -> (2^q, 2^(n-q) * ... , N) with ``qubits`` leading."""
    N = x.shape[1]
    t = x.reshape((2,) * n + (N,))
    t = np.moveaxis(t, list(qubits), list(range(len(qubits))))
    return t.reshape(2 ** len(qubits), -1, N)


def fidelity_objective(v_psis, phis):
    z = np.einsum("ri,ri->i", phis.conj(), v_psis)
    return float(np.sum(np.abs(z) ** 2))


def optimize_gate(m, u, inner_max=100, inner_tol=1e-14):
    """Maximize sum_i |tr(u M_i)|^2 over unitaries starting from ``u``.

    ``m`` has shape (N, d, d).  Returns (u, objective before, after)."""
    z = np.einsum("ab,iba->i", u, m)
    obj0 = obj = float(np.sum(np.abs(z) ** 2))
    for _ in range(inner_max):
        f = np.tensordot(z.conj(), m, axes=1)
        if not np.any(f):
            break
        # polar factor of f; inputs here are finite and square by construction
        w, _, vh = np.linalg.svd(f)
        u_new = (w @ vh).conj().T
        z_new = np.einsum("ab,iba->i", u_new, m)
        obj_new = float(np.sum(np.abs(z_new) ** 2))
        if obj_new < obj - 1e-12 * max(1.0, obj):
            raise AssertionError(f"sweep objective decreased: {obj} -> {obj_new}")
        gain = obj_new - obj
        if obj_new >= obj:
            u, z, obj = u_new, z_new, obj_new
        if gain <= inner_tol * max(1.0, obj):
            break
    return u, obj0, obj


def environment_sweep(c, a, psis, phis, sweeps=100, target=0.0, rel_tol=1e-9,
                      inner_max=100, trace_every_gate=False):
    """Optimize the trainable gates of ``c`` for the pairs (psis[:, i], phis[:, i]).

    ``psis`` and ``phis`` are (2^n, N) arrays of inputs and targets.  Returns
    (assignment, trace) where ``trace`` holds the compiling-fidelity training
    risk 1 - mean|<phi|V|psi>|^2 before the first and after every sweep.
    Stops after ``sweeps`` sweeps, when the risk reaches ``target`` or when a
    sweep improves the risk by less than ``rel_tol`` relative.
    """
    if c.pooling:
        raise UnsupportedShapeError("environment_sweep does not handle pooling")
    counts = c.use_counts
    if any(v > 1 for v in counts.values()):
        raise UnsupportedShapeError("environment_sweep needs unshared parameter groups")
    n = c.n_qubits
    psis = np.asarray(psis, dtype=complex)
    phis = np.asarray(phis, dtype=complex)
    if psis.ndim == 1:
        psis, phis = psis[:, None], phis[:, None]
    if psis.shape != phis.shape or psis.shape[0] != 2 ** n:
        raise ValidationError("psis/phis must be (2^n, N) arrays of equal shape")
    N = psis.shape[1]
    gm = assignment_matrices(c, a)
    mats = [s.gate.matrix if s.kind == "fixed" else gm[s.group] for s in c.slots]
    K = len(mats)

    def risk_of(obj):
        return max(0.0, 1.0 - obj / N)

    v = psis
    for k in range(K):
        v = apply_local(v, n, mats[k], c.slots[k].qubits)
    obj = fidelity_objective(v, phis)
    trace = [risk_of(obj)]
    for _ in range(sweeps):
        if trace[-1] <= target or not any(s.kind == "trainable" for s in c.slots):
            break
        back = [None] * K
        b = phis
        for k in range(K - 1, -1, -1):
            back[k] = b
            b = apply_local(b, n, mats[k].conj().T, c.slots[k].qubits)
        x = psis
        for k, s in enumerate(c.slots):
            if s.kind == "trainable":
                A = _to_front(x, n, s.qubits)
                B = _to_front(back[k], n, s.qubits)
                m = np.einsum("bri,ari->iba", A, B.conj())
                mats[k], before, after = optimize_gate(m, mats[k], inner_max)
                if after < obj - 1e-10 * max(1.0, obj):
                    raise AssertionError("sweep objective decreased across gates")
                obj = after
                if trace_every_gate:
                    trace.append(risk_of(obj))
            x = apply_local(x, n, mats[k], s.qubits)
        obj = fidelity_objective(x, phis)
        prev = trace[-1]
        trace.append(risk_of(obj))
        if prev - trace[-1] <= rel_tol * prev:
            break
    out = dict(a)
    for k, s in enumerate(c.slots):
        if s.kind == "trainable":
            out[s.group] = params_from_unitary(mats[k])
    return out, trace
