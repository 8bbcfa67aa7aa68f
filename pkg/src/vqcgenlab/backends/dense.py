"""Dense state-vector kernel. Qubit 0 is the most significant bit."""
from dataclasses import dataclass

import numpy as np

from ..channels import UnitaryGate
from ..errors import CapacityError, ValidationError
from ..numkit import apply_local


@dataclass(frozen=True, eq=False)
class DenseState:
    n: int
    amplitudes: np.ndarray

    def __post_init__(self):
        amp = np.asarray(self.amplitudes, dtype=complex).ravel()
        if amp.size != 2 ** self.n:
            raise ValidationError("amplitude count must be 2^n")
        if abs(np.linalg.norm(amp) - 1) > 1e-10:
            raise ValidationError("state is not normalized")
        object.__setattr__(self, "amplitudes", amp)


def basis_state(n, index):
    psi = np.zeros(2 ** n, dtype=complex)
    psi[index] = 1
    return DenseState(n, psi)


def _check_sites(n, sites):
    sites = tuple(int(q) for q in sites)
    if len(set(sites)) != len(sites):
        raise ValidationError("site collision")
    if any(not 0 <= q < n for q in sites):
        raise ValidationError("site out of range")
    return sites


def dense_apply_gate(s, g, sites):
    if s.n > 26:
        raise CapacityError("dense backend supports n <= 26")
    m = g.matrix if isinstance(g, UnitaryGate) else np.asarray(g, dtype=complex)
    sites = _check_sites(s.n, sites)
    if m.shape != (2 ** len(sites),) * 2:
        raise ValidationError("gate size does not match number of sites")
    return DenseState(s.n, apply_local(s.amplitudes, s.n, m, sites))


def dense_probabilities(s):
    p = np.abs(s.amplitudes) ** 2
    return p / p.sum()


def dense_sample(s, shots, rng):
    """Multinomial Born-rule counts ``{bitstring: count}`` (nonzero entries)."""
    if shots < 1:
        raise ValidationError("shots must be >= 1")
    counts = rng.multinomial(int(shots), dense_probabilities(s))
    return {format(i, f"0{s.n}b"): int(k) for i, k in enumerate(counts) if k}
