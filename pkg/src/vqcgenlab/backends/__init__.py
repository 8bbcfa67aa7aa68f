"""State simulators, the cluster Hamiltonian and the QCNN forward pass."""
from .dense import DenseState, dense_apply_gate, dense_sample, dense_probabilities, basis_state
from .mps import (MPSState, mps_random, mps_apply_gate, mps_apply_two_qubit, mps_apply_one_qubit,
                  mps_sample_perfect, mps_sample_all, mps_overlap, mps_to_dense, mps_from_dense, mps_product)
from .hamiltonian import HamiltonianSpec, cluster_matvec, cluster_ground_state, cluster_dense
from .qcnn import qcnn_forward_exact, qcnn_forward_sampled

__all__ = [
    "DenseState", "dense_apply_gate", "dense_sample", "dense_probabilities", "basis_state",
    "MPSState", "mps_random", "mps_apply_gate", "mps_apply_two_qubit", "mps_apply_one_qubit",
    "mps_sample_perfect", "mps_sample_all", "mps_overlap", "mps_to_dense", "mps_from_dense", "mps_product",
    "HamiltonianSpec", "cluster_matvec", "cluster_ground_state", "cluster_dense",
    "qcnn_forward_exact", "qcnn_forward_sampled",
]
