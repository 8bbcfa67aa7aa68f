"""Loss observables, risks, the generalization gap and the shot estimator."""
from dataclasses import dataclass

import numpy as np

from ..backends.dense import DenseState
from ..backends.qcnn import qcnn_forward_exact, qcnn_forward_exact_batch
from ..circuits import unitary_of
from ..errors import ValidationError

KIND_C = {"qcnn_min_prob": 1.0, "compiling_fidelity": 1.0, "compiling_sq_trace": 4.0}


@dataclass(frozen=True)
class LossSpec:
    kind: str
    C_loss: float = None

    def __post_init__(self):
        if self.kind not in KIND_C:
            raise ValidationError(f"unknown loss kind {self.kind!r}")
        c = KIND_C[self.kind] if self.C_loss is None else float(self.C_loss)
        if c < KIND_C[self.kind]:
            raise ValidationError("C_loss below the supremum of the loss")
        object.__setattr__(self, "C_loss", c)

    @property
    def is_compiling(self):
        return self.kind != "qcnn_min_prob"


@dataclass(frozen=True)
class LabeledPair:
    """``label`` is a 2-bit string (phase task) or a target state vector."""
    input: object
    label: object


@dataclass(frozen=True)
class RiskReport:
    empirical: float
    test_estimate: float

    @property
    def gap(self):
        return self.test_estimate - self.empirical


def _vec(x):
    return x.amplitudes if isinstance(x, DenseState) else np.asarray(x, dtype=complex).ravel()


def loss_eval(spec, output, pair):
    """Loss of one pair.  ``output`` is the 4 outcome probabilities (phase
    task) or the evolved state V|psi> (compiling)."""
    if spec.kind == "qcnn_min_prob":
        p = np.asarray(output)
        if p.shape != (4,) or np.iscomplexobj(p) or not isinstance(pair.label, str):
            raise ValidationError("qcnn_min_prob needs 4 probabilities and a 2-bit label")
        return float(p[int(pair.label, 2)].real)
    if isinstance(pair.label, str) or np.asarray(output).size < 2:
        raise ValidationError("compiling losses need an evolved state and a target state")
    f = abs(np.vdot(_vec(pair.label), _vec(output))) ** 2
    f = min(1.0, f)
    return (1.0 - f) * (4.0 if spec.kind == "compiling_sq_trace" else 1.0)


class CompilingModel:
    """V(alpha) acting on dense states."""

    def __init__(self, c, a):
        self.c, self.a = c, a
        self.v = unitary_of(c, a)

    def __call__(self, x):
        return self.v @ _vec(x)


class QCNNModel:
    """Exact QCNN output distribution."""

    def __init__(self, c, a):
        self.c, self.a = c, a

    def __call__(self, x):
        return qcnn_forward_exact(x if isinstance(x, DenseState) else DenseState(self.c.n_qubits, x),
                                  self.c, self.a)

    def batch(self, psis):
        return qcnn_forward_exact_batch(psis, self.c, self.a).T


def pair_losses(dataset, model, spec):
    return np.array([loss_eval(spec, model(p.input), p) for p in dataset])


def empirical_risk(dataset, model, spec):
    if len(dataset) == 0:
        raise ValidationError("empty dataset")
    return float(np.mean(pair_losses(dataset, model, spec)))


def gen_gap(train, test, model, spec):
    return RiskReport(empirical_risk(train, model, spec), empirical_risk(test, model, spec))


def shot_estimator(dataset, model, spec, sigma_est, rng, losses=None):
    """Unbiased single-shot estimate of the empirical risk from ``sigma_est``
    Bernoulli draws (pair chosen uniformly, outcome 1 with prob loss/C)."""
    if sigma_est < 1:
        raise ValidationError("sigma_est must be >= 1")
    if losses is None:
        losses = pair_losses(dataset, model, spec)
    losses = np.asarray(losses, dtype=float)
    idx = rng.integers(0, len(losses), size=int(sigma_est))
    hits = rng.random(int(sigma_est)) < np.clip(losses[idx] / spec.C_loss, 0.0, 1.0)
    return float(spec.C_loss * hits.mean())


def min_prob_decode(counts):
    """Least frequent outcome; ties go to the lexicographically smallest label."""
    c = np.asarray(counts, dtype=float)
    if c.shape != (4,):
        raise ValidationError("expected counts over the 4 outcomes")
    if not c.sum() > 0:
        raise ValidationError("counts must have a positive total")
    return format(int(np.argmin(c)), "02b")


def haar_average_fidelity_loss(u, v):
    """E_psi [1 - |<psi|U^dag V|psi>|^2] over Haar-random |psi>.

    Uses the second Haar moment: E|<psi|W|psi>|^2 = (|tr W|^2 + d) / (d (d+1)).
    """
    w = np.asarray(u).conj().T @ np.asarray(v)
    d = w.shape[0]
    return float(1.0 - (abs(np.trace(w)) ** 2 + d) / (d * (d + 1)))


def phase_free_frobenius(u, v):
    """min_phi ||U - e^{i phi} V||_F^2 = 2d - 2 |tr(U^dag V)|."""
    d = u.shape[0]
    return float(2 * d - 2 * abs(np.trace(np.asarray(u).conj().T @ np.asarray(v))))
