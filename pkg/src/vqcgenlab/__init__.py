"""vqcgenlab: simulate, train and bound the generalization of variational quantum circuits.

Subpackages and modules
-----------------------
numkit     dense linear algebra, Lanczos ground states, random matrices
channels   gates, Kraus channels, spectral and diamond distances
circuits   circuit structures, QFT/QCNN builders, VAns moves, JSON io
backends   dense and MPS simulators, cluster Hamiltonian, QCNN forward pass
learning   losses, risks, SPSA, environment sweep, VAns
bounds     covering numbers, generalization bounds, sample complexity
expcli     experiment drivers and the ``vqcgenlab`` command line
"""
__version__ = "0.1.0"
