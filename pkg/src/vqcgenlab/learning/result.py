"""Training results and optimization distances."""
from dataclasses import dataclass, field

import numpy as np

from ..channels import diamond_distance_unitary
from ..circuits import circuit_to_dict, dumps_json, gate_matrix
from ..errors import ValidationError


@dataclass
class TrainResult:
    structure: object = None
    assignment: dict = None
    theta: np.ndarray = None
    risk_trace: list = field(default_factory=list)
    edit_log: list = field(default_factory=list)
    deltas: list = field(default_factory=list)
    wall_ms: float = 0.0
    n_evals: int = 0
    snapshots: list = field(default_factory=list)

    @property
    def final_risk(self):
        return self.risk_trace[-1] if self.risk_trace else float("nan")

    def to_dict(self):
        doc = {"risk_trace": [float(r) for r in self.risk_trace],
               "edit_log": self.edit_log,
               "deltas": [float(d) for d in self.deltas],
               "n_evals": int(self.n_evals)}
        if self.structure is not None:
            doc["circuit"] = circuit_to_dict(self.structure, self.assignment)
        if self.theta is not None:
            doc["theta"] = [float(x) for x in self.theta]
        return doc

    def to_json(self):
        return dumps_json(self.to_dict())


def delta_distances(c, a_initial, a_final, reference=None):
    """Diamond distance of every trainable group between its reference map and
    its final value, sorted descending.

    The reference defaults to ``a_initial``; groups absent there (inserted
    during the run) start from the identity, which is what an insertion
    places.  ``reference`` maps group -> matrix and overrides both.
    """
    ar = c.group_arity
    if set(a_final) != set(ar):
        raise ValidationError("final assignment does not match the structure")
    out = []
    for g in c.groups:
        d = 2 ** ar[g]
        if reference is not None and g in reference:
            ref = np.asarray(reference[g])
        elif g in a_initial:
            ref = gate_matrix(a_initial[g], ar[g])
        else:
            ref = np.eye(d)
        out.append(diamond_distance_unitary(ref, gate_matrix(a_final[g], ar[g])))
    return sorted(out, reverse=True)
