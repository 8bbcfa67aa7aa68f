"""Matrix product states with TEBD-style two-site updates and perfect sampling.

Tensors have index order (left bond, physical, right bond).  The state keeps
track of its orthogonality center: tensors left of ``center`` are
left-canonical, tensors right of it are right-canonical.
"""
from dataclasses import dataclass, replace

import numpy as np

from ..channels import SWAP, UnitaryGate
from ..errors import ValidationError


@dataclass(frozen=True, eq=False)
class MPSState:
    tensors: tuple
    chi_max: int = None
    trunc_err: float = 0.0
    center: int = 0

    @property
    def n(self):
        return len(self.tensors)

    @property
    def bonds(self):
        return [t.shape[2] for t in self.tensors[:-1]]


def _qr_right(a):
    """Left-canonicalize site tensor ``a``; returns (Q tensor, R)."""
    l, d, r = a.shape
    q, rr = np.linalg.qr(a.reshape(l * d, r))
    return q.reshape(l, d, -1), rr


def _qr_left(a):
    """Right-canonicalize ``a``; returns (L, Q tensor) with a = L . Q."""
    l, d, r = a.shape
    q, rr = np.linalg.qr(a.reshape(l, d * r).T)
    return rr.T, q.T.reshape(-1, d, r)


def move_center(s, k):
    """Return an equivalent state with orthogonality center at site ``k``."""
    t = list(s.tensors)
    c = s.center
    while c < k:
        t[c], r = _qr_right(t[c])
        t[c + 1] = np.tensordot(r, t[c + 1], axes=(1, 0))
        c += 1
    while c > k:
        l, t[c] = _qr_left(t[c])
        t[c - 1] = np.tensordot(t[c - 1], l, axes=(2, 0))
        c -= 1
    return replace(s, tensors=tuple(t), center=c)


def canonicalize(s, center=0):
    """Full sweep putting the state in mixed canonical form, normalized."""
    t = list(s.tensors)
    for i in range(len(t) - 1):
        t[i], r = _qr_right(t[i])
        t[i + 1] = np.tensordot(r, t[i + 1], axes=(1, 0))
    t[-1] = t[-1] / np.linalg.norm(t[-1])
    s = replace(s, tensors=tuple(t), center=len(t) - 1)
    return move_center(s, center)


def mps_product(bits_or_vectors, chi_max=None):
    ts = []
    for b in bits_or_vectors:
        v = np.zeros(2, dtype=complex)
        if np.isscalar(b):
            v[int(b)] = 1
        else:
            v[:] = b
            v /= np.linalg.norm(v)
        ts.append(v.reshape(1, 2, 1))
    return MPSState(tuple(ts), chi_max)


def mps_random(n, chi, rng, chi_max=None):
    """Random MPS with Gaussian tensors, bonds min(chi, 2^i, 2^(n-i))."""
    if chi < 1:
        raise ValidationError("chi must be >= 1")
    dims = [1] + [min(chi, 2 ** i, 2 ** (n - i)) for i in range(1, n)] + [1]
    ts = []
    for i in range(n):
        shape = (dims[i], 2, dims[i + 1])
        ts.append((rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2))
    return canonicalize(MPSState(tuple(ts), chi_max), 0)


def mps_from_dense(psi, chi_max=None):
    psi = np.asarray(psi, dtype=complex).ravel()
    n = int(round(np.log2(psi.size)))
    ts = []
    rest = psi.reshape(1, -1)
    for i in range(n - 1):
        l = rest.shape[0]
        u, sv, vh = np.linalg.svd(rest.reshape(l * 2, -1), full_matrices=False)
        keep = max(1, int(np.sum(sv > 1e-14 * sv[0])))
        ts.append(u[:, :keep].reshape(l, 2, keep))
        rest = sv[:keep, None] * vh[:keep]
    ts.append(rest.reshape(rest.shape[0], 2, 1))
    return MPSState(tuple(ts), chi_max, center=n - 1)


def mps_to_dense(s):
    out = np.ones((1, 1), dtype=complex)
    for t in s.tensors:
        out = np.tensordot(out, t, axes=(1, 0)).reshape(-1, t.shape[2])
    return out.reshape(-1)


def mps_overlap(a, b):
    """<a|b> by left-to-right transfer contraction."""
    if a.n != b.n:
        raise ValidationError("MPS lengths differ")
    env = np.ones((1, 1), dtype=complex)
    for x, y in zip(a.tensors, b.tensors):
        env = np.tensordot(env, y, axes=(1, 0))                    # (la, d, rb)
        env = np.tensordot(x.conj(), env, axes=([0, 1], [0, 1]))   # (ra, rb)
    return complex(env[0, 0])


def mps_apply_one_qubit(s, g, site):
    m = g.matrix if isinstance(g, UnitaryGate) else np.asarray(g)
    t = list(s.tensors)
    t[site] = np.einsum("ij,ajb->aib", m, t[site])
    return replace(s, tensors=tuple(t))


def _apply_adjacent(s, m, i, chi_max):
    """Gate ``m`` on (i, i+1); SVD split with truncation to chi_max."""
    s = move_center(s, i)
    t = list(s.tensors)
    a, b = t[i], t[i + 1]
    l, r = a.shape[0], b.shape[2]
    theta = np.tensordot(a, b, axes=(2, 0))                        # l, 2, 2, r
    theta = np.tensordot(m.reshape(2, 2, 2, 2), theta, axes=([2, 3], [1, 2]))
    theta = theta.transpose(2, 0, 1, 3).reshape(l * 2, 2 * r)
    u, sv, vh = np.linalg.svd(theta, full_matrices=False)
    nz = int(np.sum(sv > 1e-15 * sv[0])) or 1
    keep = nz if chi_max is None else min(nz, chi_max)
    # round-off level singular values are dropped without counting as truncation
    disc = float(np.sum(sv[keep:nz] ** 2)) / float(np.sum(sv ** 2))
    sv = sv[:keep] / np.sqrt(np.sum(sv[:keep] ** 2))
    t[i] = u[:, :keep].reshape(l, 2, keep)
    t[i + 1] = (sv[:, None] * vh[:keep]).reshape(keep, 2, r)
    return replace(s, tensors=tuple(t), center=i + 1, trunc_err=s.trunc_err + disc)


def mps_apply_two_qubit(s, g, sites, chi_max="state"):
    """Two-qubit gate; non-adjacent sites are routed with a swap network.

    ``g`` acts with ``sites[0]`` as its first (most significant) qubit.
    ``chi_max="state"`` uses the cap stored on the state.
    """
    m = g.matrix if isinstance(g, UnitaryGate) else np.asarray(g, dtype=complex)
    chi = s.chi_max if chi_max == "state" else chi_max
    i, j = int(sites[0]), int(sites[1])
    if i == j or not (0 <= i < s.n and 0 <= j < s.n):
        raise ValidationError("invalid sites")
    if i > j:
        # relabel so the first gate qubit is the left site
        m = SWAP @ m @ SWAP
        i, j = j, i
    # bring j next to i
    for k in range(j - 1, i, -1):
        s = _apply_adjacent(s, SWAP, k, chi)
    s = _apply_adjacent(s, m, i, chi)
    for k in range(i + 1, j):
        s = _apply_adjacent(s, SWAP, k, chi)
    return s


def mps_apply_gate(s, g, sites, chi_max="state"):
    if len(sites) == 1:
        return mps_apply_one_qubit(s, g, sites[0])
    return mps_apply_two_qubit(s, g, sites, chi_max)


def mps_norm(s):
    return float(np.sqrt(abs(mps_overlap(s, s))))


def mps_sample_perfect(s, sites, rng):
    """Measure ``sites`` (in increasing order) in the computational basis.

    Each outcome is drawn from its exact conditional marginal, read off the
    orthogonality center.  Returns the bitstring (increasing site order) and
    the renormalized post-measurement MPS on the remaining sites.  The input
    is canonicalized first if its center is stale.
    """
    sites = sorted(int(q) for q in sites)
    if abs(mps_norm(s) - 1) > 1e-8:
        s = canonicalize(s, 0)
    bits = []
    removed = 0
    for q in sites:
        k = q - removed
        s = move_center(s, k)
        a = s.tensors[k]
        p = np.array([np.sum(np.abs(a[:, 0, :]) ** 2), np.sum(np.abs(a[:, 1, :]) ** 2)])
        p = p / p.sum()
        b = int(rng.random() >= p[0])
        bits.append(b)
        mat = a[:, b, :] / np.sqrt(p[b])
        t = list(s.tensors)
        del t[k]
        if not t:
            s = replace(s, tensors=(), center=0)
        elif k < len(t):
            t[k] = np.tensordot(mat, t[k], axes=(1, 0))
            s = replace(s, tensors=tuple(t), center=k)
        else:
            t[k - 1] = np.tensordot(t[k - 1], mat, axes=(2, 0))
            s = replace(s, tensors=tuple(t), center=k - 1)
        removed += 1
    return "".join(map(str, bits)), s


def mps_sample_all(s, shots, rng):
    """Sample every site ``shots`` times at once; returns an (shots, n) int array.

    Same chain rule as ``mps_sample_perfect`` with the center at site 0: the
    right-canonical tail makes each conditional marginal the squared norm of
    the propagated left vector.
    """
    s = canonicalize(s, 0)
    env = np.ones((shots, 1), dtype=complex)
    out = np.empty((shots, s.n), dtype=np.int8)
    for k, a in enumerate(s.tensors):
        v0 = env @ a[:, 0, :]
        v1 = env @ a[:, 1, :]
        p0 = np.sum(np.abs(v0) ** 2, axis=1)
        p1 = np.sum(np.abs(v1) ** 2, axis=1)
        b = rng.random(shots) * (p0 + p1) >= p0
        out[:, k] = b
        env = np.where(b[:, None], v1, v0)
        env /= np.linalg.norm(env, axis=1, keepdims=True)
    return out
