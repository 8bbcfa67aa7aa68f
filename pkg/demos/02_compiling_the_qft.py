# Compile the 3-qubit QFT with VAns from a handful of Haar-random training states,
# then check the learned circuit on fresh states and against the QFT matrix.
import numpy as np

from vqcgenlab.circuits import qft_matrix, unitary_of
from vqcgenlab.learning import (VansConfig, compiling_risk, haar_average_fidelity_loss,
                                phase_free_frobenius, vans_optimize)
from vqcgenlab.numkit import haar_state, stream
from vqcgenlab import bounds

n, d = 3, 8
u = qft_matrix(n)
for N in (1, 2, 4):
    psis = np.column_stack([haar_state(d, stream(7, "train", N, i)) for i in range(N)])
    res = vans_optimize(psis, u @ psis, VansConfig(max_proposals=200), stream(7, "vans", N))
    c, a = res.structure, res.assignment
    v = unitary_of(c, a)
    q = bounds.BoundQuery(T=c.T, N=N, Delta_t=tuple(min(2.0, x) for x in res.deltas),
                          G_T=1 + sum(e["accepted"] for e in res.edit_log))
    print(f"N={N}: gates={c.gate_count:2d}  train={compiling_risk(c, a, psis, u @ psis):.2e}  "
          f"test={haar_average_fidelity_loss(u, v):.2e}  ||U-V||_F^2={phase_free_frobenius(u, v):.2e}  "
          f"bound={bounds.gen_bound_mother(q).value:.3f}")
