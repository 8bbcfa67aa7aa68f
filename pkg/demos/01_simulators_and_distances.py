# Dense vs MPS simulation, diamond distances and the cluster Hamiltonian.
import numpy as np

from vqcgenlab.backends import (DenseState, HamiltonianSpec, cluster_ground_state, dense_apply_gate,
                                mps_apply_gate, mps_product, mps_to_dense)
from vqcgenlab.channels import KrausChannel, diamond_bracket, diamond_distance_unitary
from vqcgenlab.numkit import haar_unitary, seeded_rng

rng = seeded_rng(0)
n = 8

# the same random brickwork on both backends
s = mps_product([np.array([1, 0], dtype=complex)] * n)
psi = DenseState(n, np.eye(2 ** n, dtype=complex)[0])
for layer in range(6):
    for q in range(layer % 2, n - 1, 2):
        g = haar_unitary(4, rng)
        s = mps_apply_gate(s, g, [q, q + 1], chi_max=None)
        psi = dense_apply_gate(psi, g, [q, q + 1])
print("overlap MPS vs dense:", abs(np.vdot(mps_to_dense(s), psi.amplitudes)))
print("bond dimensions:", [t.shape[2] for t in s.tensors[:-1]])

# truncating to chi=4 loses weight
s4 = mps_product([np.array([1, 0], dtype=complex)] * n)
rng = seeded_rng(0)
for layer in range(6):
    for q in range(layer % 2, n - 1, 2):
        s4 = mps_apply_gate(s4, haar_unitary(4, rng), [q, q + 1], chi_max=4)
print("chi=4 overlap:", abs(np.vdot(mps_to_dense(s4), psi.amplitudes)), "discarded:", s4.trunc_err)

# exact diamond distance of two unitaries vs the see-saw lower bound
u, v = haar_unitary(2, rng), haar_unitary(2, rng)
lo, hi = diamond_bracket(KrausChannel.unitary(u), KrausChannel.unitary(v), rng=rng)
print(f"diamond exact {diamond_distance_unitary(u, v):.8f}  bracket [{lo:.8f}, {hi:.8f}]")
theta = np.pi / 4
print("I vs exp(i pi/4 Z):", diamond_distance_unitary(np.eye(2), np.diag(np.exp([1j * theta, -1j * theta]))))

# ground-state energies along J1 at J2 = 0
for j1 in (-2.0, 0.0, 2.0):
    _, e = cluster_ground_state(HamiltonianSpec(10, j1, 0.0), return_energy=True)
    print(f"J1 = {j1:+.1f}: E0 = {e:.10f}")
