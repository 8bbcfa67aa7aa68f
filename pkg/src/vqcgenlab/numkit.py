"""Dense complex linear algebra, spectral routines and random-matrix sampling.

Matrices are plain ``numpy.ndarray`` objects of dtype ``complex128``.  Random
streams are ``numpy.random.Generator`` instances built on PCG64, so equal seeds
give bit-identical draws.
"""
import zlib

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, eigsh, ArpackNoConvergence

from .errors import ConvergenceError, DegenerateInputError, ValidationError

RNG_ALGORITHM = "PCG64"


def seeded_rng(seed):
    """Return a PCG64 generator for ``seed`` (int or SeedSequence)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.PCG64(seed))


def split_rng(seed, k):
    """Deterministically derive ``k`` independent generators from ``seed``.

    Streams derived this way never overlap with each other or with
    ``seeded_rng(seed)``.
    """
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    return [np.random.Generator(np.random.PCG64(c)) for c in ss.spawn(k)]


def _key_int(k):
    return zlib.crc32(k.encode()) if isinstance(k, str) else int(k)


def stream(seed, *key):
    """Generator for the named substream ``key`` of ``seed``.

    Key parts are ints or strings (hashed with crc32).  Used to keep training
    and test data on provably distinct streams.
    """
    ss = np.random.SeedSequence(entropy=seed, spawn_key=tuple(_key_int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def as_cmat(m):
    m = np.asarray(m, dtype=complex)
    if m.ndim != 2:
        raise ValidationError("expected a 2-d matrix")
    if not np.all(np.isfinite(m)):
        raise ValidationError("matrix has non-finite entries")
    return m


def polar_unitary(m):
    """Unitary polar factor W V^dag of ``m = W S V^dag``.

    This is the unitary maximizing Re tr(u^dag m).
    """
    m = as_cmat(m)
    if m.shape[0] != m.shape[1]:
        raise ValidationError("polar_unitary needs a square matrix")
    if not np.any(m):
        raise DegenerateInputError("zero matrix has no unique polar factor")
    w, _, vh = np.linalg.svd(m)
    return w @ vh


def is_hermitian(h, atol=1e-10):
    return h.shape[0] == h.shape[1] and np.max(np.abs(h - h.conj().T), initial=0.0) <= atol


def expm_hermitian(h, scale=1.0):
    """exp(i * scale * h) for Hermitian ``h`` via eigendecomposition."""
    h = as_cmat(h)
    if not is_hermitian(h):
        raise ValidationError("expm_hermitian needs a Hermitian matrix")
    w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
    return (v * np.exp(1j * scale * w)) @ v.conj().T


def haar_unitary(d, rng):
    """Haar-random d x d unitary (Ginibre + QR with phase-fixed R diagonal)."""
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    z = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r)
    return q * (diag / np.abs(diag))


def haar_state(d, rng):
    """First column of a Haar unitary, i.e. a Haar-random unit vector."""
    return haar_unitary(d, rng)[:, 0].copy()


def random_hermitian(d, rng):
    """GUE sample: (G + G^dag)/2 with complex Gaussian G. Exactly Hermitian."""
    if d < 1:
        raise ValidationError("dimension must be >= 1")
    g = (rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))) / np.sqrt(2)
    h = 0.5 * (g + g.conj().T)
    up = np.triu(h, 1)
    return up + up.conj().T + np.diag(h.diagonal().real)


def lanczos_ground(matvec, dim, tol=1e-9, maxiter=None, v0=None, dense_cutoff=64):
    """Lowest eigenpair of a Hermitian operator given as a matvec handle.

    Uses ARPACK's implicitly restarted Lanczos (``eigsh``) for large spaces and a
    dense eigensolver below ``dense_cutoff``.  The returned residual satisfies
    ||H v - E v|| <= tol * max(1, |E|) or a ConvergenceError is raised.
    """
    if dim < 1 or dim > 2 ** 20:
        raise ValidationError("dim must lie in [1, 2^20]")
    if tol <= 0:
        raise ValidationError("tol must be positive")
    if dim <= dense_cutoff:
        eye = np.eye(dim, dtype=complex)
        h = np.column_stack([matvec(eye[:, j]) for j in range(dim)])
        w, v = np.linalg.eigh(0.5 * (h + h.conj().T))
        e, vec = float(w[0]), v[:, 0]
    else:
        op = LinearOperator((dim, dim), matvec=matvec, dtype=complex)
        if v0 is None:
            v0 = seeded_rng(0).standard_normal(dim).astype(complex)
        try:
            w, v = eigsh(op, k=1, which="SA", tol=0, v0=v0, maxiter=maxiter or 20 * dim,
                         ncv=min(dim - 1, 40))
        except ArpackNoConvergence as exc:
            # fall back to the start vector's Rayleigh quotient if ARPACK kept no pairs
            x = v0 / np.linalg.norm(v0)
            hx = matvec(x)
            best = float(np.linalg.norm(hx - np.vdot(x, hx).real * x))
            for e_i, v_i in zip(exc.eigenvalues, exc.eigenvectors.T):
                best = min(best, float(np.linalg.norm(matvec(v_i) - e_i * v_i)))
            raise ConvergenceError("Lanczos did not converge", best_residual=best) from exc
        e, vec = float(w[0]), v[:, 0]
    vec = vec / np.linalg.norm(vec)
    res = np.linalg.norm(matvec(vec) - e * vec)
    if res > tol * max(1.0, abs(e)):
        raise ConvergenceError(f"residual {res:.3e} above tolerance", best_residual=res)
    return e, vec


def spectral_norm(m):
    return float(np.linalg.norm(m, 2))


def kron_all(*ms):
    out = np.ones((1, 1), dtype=complex)
    for m in ms:
        out = np.kron(out, m)
    return out


def sqrtm_psd(m):
    w, v = np.linalg.eigh(0.5 * (m + m.conj().T))
    return (v * np.sqrt(np.clip(w, 0, None))) @ v.conj().T


def trace_norm(m):
    return float(np.sum(sla.svdvals(m)))


def apply_local(psi, n, g, sites):
    """Apply a 2^k x 2^k matrix ``g`` to qubits ``sites`` of ``psi``.

    ``psi`` has shape (2^n,) or (2^n, batch); qubit 0 is the most significant
    bit.  Returns a new array of the same shape.
    """
    k = len(sites)
    rest = psi.shape[1:]
    t = psi.reshape((2,) * n + rest)
    gt = g.reshape((2,) * (2 * k))
    t = np.tensordot(gt, t, axes=(list(range(k, 2 * k)), list(sites)))
    t = np.moveaxis(t, list(range(k)), list(sites))
    return np.ascontiguousarray(t).reshape(psi.shape)
