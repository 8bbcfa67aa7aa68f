"""Gates, Kraus channels and the norms the bounds consume.

Diamond distances between unitary channels are computed exactly from the
spectrum of U^dag V.  For general channels only a bracket (lo, hi) is
available: ``lo`` comes from an ascent over ancilla-extended pure inputs and
``hi`` from the trace norm of the Choi difference.
"""
from dataclasses import dataclass

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from .errors import ValidationError
from .numkit import as_cmat, seeded_rng

PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}
HADAMARD = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
CNOT = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)


@dataclass(frozen=True, eq=False)
class UnitaryGate:
    """A 1- or 2-qubit unitary."""
    matrix: np.ndarray

    def __post_init__(self):
        m = as_cmat(self.matrix)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValidationError("gate must be 2x2 or 4x4")
        if np.linalg.norm(m.conj().T @ m - np.eye(m.shape[0]), 2) > 1e-10:
            raise ValidationError("gate matrix is not unitary")
        object.__setattr__(self, "matrix", m)

    @property
    def arity(self):
        return 1 if self.matrix.shape[0] == 2 else 2

    def __eq__(self, other):
        return isinstance(other, UnitaryGate) and np.array_equal(self.matrix, other.matrix)

    def __hash__(self):
        return hash(self.matrix.tobytes())


@dataclass(frozen=True, eq=False)
class KrausChannel:
    """CPTP map rho -> sum_k K_k rho K_k^dag."""
    kraus_ops: tuple

    def __post_init__(self):
        ops = tuple(as_cmat(k) for k in self.kraus_ops)
        if not ops:
            raise ValidationError("channel needs at least one Kraus operator")
        shape = ops[0].shape
        if any(k.shape != shape for k in ops):
            raise ValidationError("Kraus operators must share a shape")
        s = sum(k.conj().T @ k for k in ops)
        if np.linalg.norm(s - np.eye(shape[1]), 2) > 1e-10:
            raise ValidationError("channel is not trace preserving")
        object.__setattr__(self, "kraus_ops", ops)

    @property
    def in_dim(self):
        return self.kraus_ops[0].shape[1]

    @property
    def out_dim(self):
        return self.kraus_ops[0].shape[0]

    @classmethod
    def unitary(cls, u):
        u = u.matrix if isinstance(u, UnitaryGate) else u
        return cls((np.asarray(u, dtype=complex),))

    def choi(self):
        """Unnormalized Choi matrix sum_ij |i><j| (x) E(|i><j|) (input first)."""
        d = self.in_dim
        j = np.zeros((d * self.out_dim, d * self.out_dim), dtype=complex)
        for k in self.kraus_ops:
            vec = k.T.reshape(-1)  # column-stacked |K>> with input index first
            j += np.outer(vec, vec.conj())
        return j

    def adjoint(self, x):
        return sum(k.conj().T @ x @ k for k in self.kraus_ops)


def depolarizing(p=1.0):
    """1-qubit depolarizing channel; p=1 is the completely depolarizing map."""
    w = [1 - 3 * p / 4, p / 4, p / 4, p / 4]
    return KrausChannel(tuple(np.sqrt(wi) * PAULI[s] for wi, s in zip(w, "IXYZ")))


def _matrix(u):
    return u.matrix if isinstance(u, UnitaryGate) else as_cmat(u)


def _check_pair(u, v):
    a, b = _matrix(u), _matrix(v)
    if a.shape != b.shape:
        raise ValidationError("arity mismatch")
    return a, b


def spectral_distance(u, v):
    """||U - V|| in spectral norm."""
    a, b = _check_pair(u, v)
    return float(np.linalg.norm(a - b, 2))


def hull_distance_to_origin(points):
    """Euclidean distance from 0 to the convex hull of complex ``points``."""
    p = np.asarray(points, dtype=complex).ravel()
    xy = np.column_stack([p.real, p.imag])
    cand = [np.min(np.abs(p))]
    # closest point on each segment; covers the 1-d degenerate case too
    if len(p) > 1:
        try:
            idx = ConvexHull(xy).vertices
            edges = [(p[idx[i]], p[idx[(i + 1) % len(idx)]]) for i in range(len(idx))]
            inside = _origin_inside(xy[idx])
        except (QhullError, ValueError):
            edges = [(a, b) for i, a in enumerate(p) for b in p[i + 1:]]
            inside = False
        if inside:
            return 0.0
        for a, b in edges:
            ab = b - a
            den = abs(ab) ** 2
            if den == 0:
                continue
            t = np.clip(-(np.conj(ab) * a).real / den, 0.0, 1.0)
            cand.append(abs(a + t * ab))
    return float(min(cand))


def _origin_inside(poly):
    # poly given counter-clockwise by qhull
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (x2 - x1) * (0 - y1) - (y2 - y1) * (0 - x1) < 0:
            return False
    return True


def diamond_distance_unitary(u, v):
    """||U . U^dag - V . V^dag||_diamond = 2 sqrt(1 - dist(0, conv spec(U^dag V))^2)."""
    a, b = _check_pair(u, v)
    lam = np.linalg.eigvals(a.conj().T @ b)
    lam = lam / np.abs(lam)
    r = min(1.0, hull_distance_to_origin(lam))
    return float(2.0 * np.sqrt(max(0.0, 1.0 - r * r)))


def apply_channel(c, rho, atol=1e-10):
    rho = as_cmat(rho)
    if rho.shape != (c.in_dim, c.in_dim):
        raise ValidationError("rho dimension does not match channel input")
    if np.max(np.abs(rho - rho.conj().T)) > atol:
        raise ValidationError("rho is not Hermitian")
    if abs(np.trace(rho) - 1) > atol:
        raise ValidationError("rho does not have unit trace")
    if np.linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0] < -atol:
        raise ValidationError("rho is not positive semidefinite")
    out = sum(k @ rho @ k.conj().T for k in c.kraus_ops)
    return 0.5 * (out + out.conj().T)


def _output_difference(a, b, psi):
    """(a (x) id)(|psi><psi|) - (b (x) id)(|psi><psi|); psi[i, j] = <i_sys j_anc|psi>."""
    def out(c):
        m = 0
        for k in c.kraus_ops:
            v = (k @ psi).reshape(-1)
            m = m + np.outer(v, v.conj())
        return m
    return out(a) - out(b)


def diamond_bracket(a, b, restarts=32, rng=None, max_iter=500, tol=1e-8):
    """(lo, hi) bracket on ||a - b||_diamond.

    ``lo`` is the best trace distance ||(a - b) (x) id (psi)||_1 found by a
    see-saw ascent over pure inputs with an ancilla of the input dimension;
    every iterate is a feasible input, so ``lo`` is a certified lower bound.
    ``hi`` is min(2, ||J_a - J_b||_1) with unnormalized Choi matrices.
    """
    if a.in_dim != b.in_dim or a.out_dim != b.out_dim:
        raise ValidationError("channel dimensions differ")
    d = a.in_dim
    if d > 16:
        raise ValidationError("diamond_bracket supports in_dim <= 16")
    rng = seeded_rng(0 if rng is None else rng)
    dj = a.choi() - b.choi()
    sv = np.linalg.svd(dj, compute_uv=False)
    hi = min(2.0, float(np.sum(sv)))
    lo = float(np.sum(sv)) / d  # maximally entangled input
    if hi <= 1e-14:
        return 0.0, 0.0
    for _ in range(restarts):
        psi = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        psi /= np.linalg.norm(psi)
        val = -np.inf
        for _ in range(max_iter):
            x = _output_difference(a, b, psi)
            w, v = np.linalg.eigh(x)
            new = float(np.sum(np.abs(w)))
            lo = max(lo, new)
            if new - val < tol:
                break
            val = new
            s = (v * np.sign(w)) @ v.conj().T  # optimal dual witness for this input
            # maximize <psi|(Phi_a^dag - Phi_b^dag)(S)|psi> over psi
            g = np.zeros((d * d, d * d), dtype=complex)
            for sign, c in ((1.0, a), (-1.0, b)):
                for k in c.kraus_ops:
                    kk = np.kron(k, np.eye(d))
                    g += sign * kk.conj().T @ s @ kk
            _, vv = np.linalg.eigh(0.5 * (g + g.conj().T))
            psi = vv[:, -1].reshape(d, d)
    lo = min(lo, hi)
    return lo, hi
