"""Generalized cluster Hamiltonian

    H = sum_j ( Z_j - J1 X_j X_{j+1} - J2 X_{j-1} Z_j X_{j+1} )

with periodic boundaries, applied on the fly with bit operations.
"""
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from ..errors import CapacityError, ValidationError
from ..numkit import lanczos_ground, seeded_rng
from .dense import DenseState


@dataclass(frozen=True)
class HamiltonianSpec:
    n: int
    J1: float
    J2: float
    periodic: bool = True

    def __post_init__(self):
        if self.n < 2:
            raise ValidationError("need n >= 2")
        if self.J2 != 0 and self.n < 3:
            raise ValidationError("three-site term needs n >= 3")


@lru_cache(maxsize=8)
def _tables(n, periodic, shift):
    """Per-site sign vectors and flip masks; site j sits at bit n-1-j."""
    idx = np.arange(2 ** n)

    def bit(j):
        return (idx >> (n - 1 - j)) & 1

    def mask(*js):
        return sum(1 << (n - 1 - j) for j in js)

    zsign, xx, xzx = [], [], []
    for jj in range(n):
        j = (jj + shift) % n
        zsign.append(1.0 - 2.0 * bit(j))
        if periodic or j + 1 < n:
            xx.append(idx ^ mask(j, (j + 1) % n))
        if periodic or 0 < j < n - 1:
            xzx.append((idx ^ mask((j - 1) % n, (j + 1) % n), 1.0 - 2.0 * bit(j)))
    zsum = np.sum(zsign, axis=0)
    return zsum, tuple(xx), tuple(xzx)


def cluster_matvec(h, shift=0):
    """Matvec handle for ``h``; ``shift`` relabels sites j -> j + shift."""
    if h.n > 20:
        raise CapacityError("matvec supports n <= 20")
    zsum, xx, xzx = _tables(h.n, h.periodic, shift % h.n)

    def mv(v):
        v = np.asarray(v)
        out = zsum * v
        if h.J1:
            acc = np.zeros_like(out)
            for perm in xx:
                acc += v[perm]
            out = out - h.J1 * acc
        if h.J2:
            acc = np.zeros_like(out)
            for perm, sz in xzx:
                acc += sz * v[perm]
            out = out - h.J2 * acc
        return out

    return mv


def cluster_dense(h):
    """Dense matrix (for oracles, n <= 12)."""
    if h.n > 12:
        raise CapacityError("dense Hamiltonian limited to n <= 12")
    mv = cluster_matvec(h)
    return np.column_stack([mv(e) for e in np.eye(2 ** h.n)])


def cluster_ground_state(h, tol=1e-9, seed=0, return_energy=False):
    if h.n > 16:
        raise CapacityError("cluster_ground_state supports n <= 16")
    dim = 2 ** h.n
    v0 = seeded_rng(seed).standard_normal(dim).astype(complex)
    e, v = lanczos_ground(cluster_matvec(h), dim, tol=tol, v0=v0)
    # fix the global phase so the largest amplitude is real positive
    k = int(np.argmax(np.abs(v)))
    v = v * (abs(v[k]) / v[k])
    st = DenseState(h.n, v / np.linalg.norm(v))
    return (st, e) if return_energy else st
