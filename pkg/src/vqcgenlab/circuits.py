"""Parameterized circuit structures, the QFT/QCNN builders and VAns edit moves.

A structure is an ordered tuple of gate slots.  Trainable slots point at a
parameter group; several slots may share one group (gate sharing).  A
``ParamAssignment`` is a plain dict ``{group_id: np.ndarray}`` with 15 reals
for two-qubit groups and 3 reals for one-qubit groups.

Gate parametrization: ``exp(i sum_k theta_k G_k)`` with ``G_k`` the Pauli
products in lexicographic order over (I, X, Y, Z), identity excluded::

    2 qubits: IX IY IZ XI XX XY XZ YI YX YY YZ ZI ZX ZY ZZ
    1 qubit:  X Y Z
"""
from dataclasses import dataclass, replace
import itertools
import json
import math

import numpy as np
import scipy.linalg as sla

from .channels import PAULI, HADAMARD, SWAP, UnitaryGate
from .errors import (CapacityError, ParseError, UnsupportedShapeError,
                     ValidationError)
from .numkit import apply_local, random_hermitian

PAULI_LABELS_2 = ["".join(p) for p in itertools.product("IXYZ", repeat=2)][1:]
PAULI_LABELS_1 = ["X", "Y", "Z"]
GENERATORS = {
    2: np.array([np.kron(PAULI[a], PAULI[b]) for a, b in PAULI_LABELS_2]),
    1: np.array([PAULI[a] for a in PAULI_LABELS_1]),
}
N_PARAMS = {1: 3, 2: 15}


@dataclass(frozen=True)
class GateSlot:
    slot_id: int
    qubits: tuple
    kind: str                      # "fixed" | "trainable"
    gate: UnitaryGate = None       # fixed only
    group: int = None              # trainable only


@dataclass(frozen=True)
class PoolLayer:
    """Measure ``measured`` after the first ``after`` slots; conditioned on the
    outcome of ``measured[i]`` apply group0 (outcome 0) or group1 (outcome 1)
    to ``targets[i]``."""
    after: int
    measured: tuple
    targets: tuple
    group0: int
    group1: int


@dataclass(frozen=True)
class CircuitStructure:
    n_qubits: int
    slots: tuple = ()
    pooling: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "slots", tuple(self.slots))
        object.__setattr__(self, "pooling", tuple(self.pooling))
        for s in self.slots:
            q = tuple(s.qubits)
            if len(q) not in (1, 2) or len(set(q)) != len(q):
                raise ValidationError(f"slot {s.slot_id}: invalid qubits {q}")
            if any(not 0 <= x < self.n_qubits for x in q):
                raise ValidationError(f"slot {s.slot_id}: qubit out of range")
            if s.kind == "fixed":
                if s.gate is None or s.gate.arity != len(q):
                    raise ValidationError(f"slot {s.slot_id}: fixed gate arity mismatch")
            elif s.kind == "trainable":
                if s.group is None:
                    raise ValidationError(f"slot {s.slot_id}: trainable slot without group")
            else:
                raise ValidationError(f"slot {s.slot_id}: unknown kind {s.kind!r}")
        ar = {}
        for g, a in self._group_arity_pairs():
            if ar.setdefault(g, a) != a:
                raise ValidationError(f"group {g} used with different arities")

    def _group_arity_pairs(self):
        for s in self.slots:
            if s.kind == "trainable":
                yield s.group, len(s.qubits)
        for p in self.pooling:
            yield p.group0, 1
            yield p.group1, 1

    @property
    def group_arity(self):
        return dict(self._group_arity_pairs())

    @property
    def groups(self):
        """Trainable group ids in order of first appearance."""
        return list(dict.fromkeys(g for g, _ in self._group_arity_pairs()))

    @property
    def T(self):
        return len(self.groups)

    @property
    def use_counts(self):
        """M_t per group: number of placements."""
        m = {}
        for s in self.slots:
            if s.kind == "trainable":
                m[s.group] = m.get(s.group, 0) + 1
        for p in self.pooling:
            for g in (p.group0, p.group1):
                m[g] = m.get(g, 0) + len(p.targets)
        return m

    @property
    def gate_count(self):
        return len(self.slots)


def _check_params(params, arity):
    p = np.asarray(params, dtype=float).ravel()
    if p.size != N_PARAMS[arity]:
        raise ValidationError(f"expected {N_PARAMS[arity]} parameters, got {p.size}")
    if not np.all(np.isfinite(p)):
        raise ValidationError("parameters must be finite")
    return p


def gate_matrix(params, arity=None):
    """exp(i sum theta_k G_k) as a raw matrix; arity inferred from length."""
    p = np.asarray(params, dtype=float).ravel()
    arity = arity or (2 if p.size == 15 else 1)
    p = _check_params(p, arity)
    h = np.tensordot(p, GENERATORS[arity], axes=1)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(1j * w)) @ v.conj().T


def su4_from_params(params):
    return UnitaryGate(gate_matrix(_check_params(params, 2), 2))


def su2_from_params(params):
    return UnitaryGate(gate_matrix(_check_params(params, 1), 1))


def params_from_unitary(u):
    """Parameters theta with exp(i sum theta_k G_k) = u up to global phase."""
    u = np.asarray(u.matrix if isinstance(u, UnitaryGate) else u, dtype=complex)
    d = u.shape[0]
    arity = {2: 1, 4: 2}[d]
    u = u / np.linalg.det(u) ** (1.0 / d)
    t, z = sla.schur(u, output="complex")
    phi = np.angle(np.diag(t))
    # pick the branch with sum(phi) = 0 so the generator is traceless
    k = int(round(phi.sum() / (2 * np.pi)))
    order = np.argsort(phi)
    if k > 0:
        phi[order[-k:]] -= 2 * np.pi
    elif k < 0:
        phi[order[:-k]] += 2 * np.pi
    h = (z * phi) @ z.conj().T
    return np.real(np.einsum("kij,ji->k", GENERATORS[arity], h)) / d


def assignment_matrices(c, a):
    """{group: matrix} for every trainable group of ``c``."""
    ar = c.group_arity
    missing = set(ar) - set(a)
    if missing:
        raise ValidationError(f"assignment lacks groups {sorted(missing)}")
    return {g: gate_matrix(a[g], ar[g]) for g in ar}


def slot_matrix(s, mats):
    return s.gate.matrix if s.kind == "fixed" else mats[s.group]


def apply_slots(psi, c, mats, start=0, stop=None):
    for s in c.slots[start:stop]:
        psi = apply_local(psi, c.n_qubits, slot_matrix(s, mats), s.qubits)
    return psi


def unitary_of(c, a, max_qubits=12):
    """Dense unitary of a pooling-free circuit; slot order = application order."""
    if c.pooling:
        raise UnsupportedShapeError("circuits with pooling are not a single unitary")
    if c.n_qubits > max_qubits:
        raise CapacityError(f"unitary_of supports n <= {max_qubits}")
    mats = assignment_matrices(c, a)
    return apply_slots(np.eye(2 ** c.n_qubits, dtype=complex), c, mats)


# --- builders -------------------------------------------------------------

def controlled_phase(phi):
    return np.diag([1, 1, 1, np.exp(1j * phi)]).astype(complex)


def build_qft(n):
    """QFT as two-qubit blocks. Qubit 0 is the most significant bit.

    Hadamard H_j is merged into the block CP(j, j+1); the last Hadamard is
    merged into CP(n-2, n-1) from the other side.  Reversal swaps are explicit.
    """
    if not 2 <= n <= 40:
        raise ValidationError("build_qft needs 2 <= n <= 40")
    h_first = np.kron(HADAMARD, np.eye(2))
    h_second = np.kron(np.eye(2), HADAMARD)
    slots = []
    for j in range(n - 1):
        for k in range(j + 1, n):
            m = controlled_phase(2 * np.pi / 2 ** (k - j + 1))
            if k == j + 1:
                m = m @ h_first
                if j == n - 2:
                    m = h_second @ m
            slots.append(GateSlot(len(slots), (j, k), "fixed", gate=UnitaryGate(m)))
    for j in range(n // 2):
        slots.append(GateSlot(len(slots), (j, n - 1 - j), "fixed", gate=UnitaryGate(SWAP)))
    return CircuitStructure(n, tuple(slots))


def qft_matrix(n):
    d = 2 ** n
    j = np.arange(d)
    return np.exp(2j * np.pi * np.outer(j, j) / d) / np.sqrt(d)


def build_qcnn(n, config=None):
    """QCNN with log2(n) - 1 conv/pool layers.

    Conv layer: one 2-qubit group on all periodic nearest-neighbour pairs of the
    active qubits (even pairs, odd pairs, wrap pair).  Pool layer: measure every
    second active qubit; the outcome selects one of two 1-qubit groups applied
    to the kept left neighbour.  Three groups per layer.
    """
    if n < 4 or n & (n - 1):
        raise ValidationError("build_qcnn needs n a power of two, n >= 4")
    active = list(range(n))
    slots, pools = [], []
    gid = 0
    while len(active) > 2:
        m = len(active)
        conv = gid
        pairs = [(active[i], active[i + 1]) for i in range(0, m - 1, 2)]
        pairs += [(active[i], active[(i + 1) % m]) for i in range(1, m, 2)]
        for q in pairs:
            slots.append(GateSlot(len(slots), q, "trainable", group=conv))
        measured, targets = tuple(active[1::2]), tuple(active[0::2])
        pools.append(PoolLayer(len(slots), measured, targets, gid + 1, gid + 2))
        gid += 3
        active = list(targets)
    return CircuitStructure(n, tuple(slots), tuple(pools))


def random_assignment(c, rng, scale=np.pi):
    ar = c.group_arity
    return {g: rng.uniform(-scale, scale, N_PARAMS[ar[g]]) for g in c.groups}


def zero_assignment(c):
    ar = c.group_arity
    return {g: np.zeros(N_PARAMS[ar[g]]) for g in c.groups}


def to_trainable(c):
    """Replace every fixed slot by its own trainable group reproducing it
    (up to global phase).  Returns (structure, assignment)."""
    slots, a = [], {}
    gid = max(c.groups, default=-1) + 1
    for s in c.slots:
        if s.kind == "fixed":
            a[gid] = params_from_unitary(s.gate.matrix)
            slots.append(GateSlot(s.slot_id, s.qubits, "trainable", group=gid))
            gid += 1
        else:
            slots.append(s)
    return replace(c, slots=tuple(slots)), a


# --- VAns moves -----------------------------------------------------------

def vans_insert(c, a, rng):
    """Insert an identity-valued trainable 2-qubit gate with a fresh group at a
    uniformly random position on a uniformly random qubit pair."""
    if c.n_qubits < 2:
        raise ValidationError("vans_insert needs at least 2 qubits")
    pos = int(rng.integers(0, len(c.slots) + 1))
    i, j = sorted(rng.choice(c.n_qubits, size=2, replace=False).tolist())
    g = max(list(a) + c.groups, default=-1) + 1
    sid = max((s.slot_id for s in c.slots), default=-1) + 1
    slots = list(c.slots)
    slots.insert(pos, GateSlot(sid, (i, j), "trainable", group=g))
    a2 = dict(a)
    a2[g] = np.zeros(15)
    return replace(c, slots=tuple(slots)), a2


def remove_slot(c, a, index):
    slots = c.slots[:index] + c.slots[index + 1:]
    c2 = replace(c, slots=slots)
    a2 = {g: v for g, v in a.items() if g in set(c2.groups)}
    return c2, a2


def vans_remove(c, a, risk_fn, threshold):
    """Greedily drop trainable slots (in slot order) whose removal raises
    ``risk_fn(c, a)`` by less than ``threshold`` (or by <= 0)."""
    if threshold < 0:
        raise ValidationError("threshold must be >= 0")
    base = risk_fn(c, a)
    i = 0
    while i < len(c.slots):
        if c.slots[i].kind != "trainable":
            i += 1
            continue
        c2, a2 = remove_slot(c, a, i)
        r = risk_fn(c2, a2)
        if r - base < threshold or r - base <= 0:
            c, a, base = c2, a2, r
        else:
            i += 1
    return c, a


def perturbation_scale(h, eps):
    """delta >= 0 with ||I - exp(i delta h)|| = eps.

    ||I - e^{i delta h}|| = 2 sin(delta lambda_max / 2) on [0, pi / lambda_max],
    which is monotone, so the root is unique and explicit.
    """
    lam = float(np.max(np.abs(np.linalg.eigvalsh(h))))
    return 2.0 * math.asin(eps / 2.0) / lam


def perturb_near_solution(c, a, eps, rng):
    """Replace each trainable gate u by u exp(i delta h), h traceless GUE,
    with spectral distance exactly ``eps``."""
    if not 0 < eps < 2:
        raise ValidationError("eps must lie in (0, 2)")
    if any(s.kind != "trainable" for s in c.slots) or c.pooling:
        raise ValidationError("perturb_near_solution needs an all-trainable unitary circuit")
    ar = c.group_arity
    out = {}
    for g in c.groups:
        d = 2 ** ar[g]
        u = gate_matrix(a[g], ar[g])
        h = random_hermitian(d, rng)
        h = h - np.trace(h) / d * np.eye(d)
        delta = perturbation_scale(h, eps)
        w, v = np.linalg.eigh(h)
        out[g] = params_from_unitary(u @ ((v * np.exp(1j * delta * w)) @ v.conj().T))
    return out


# --- JSON persistence -----------------------------------------------------

def _fmt(x):
    if isinstance(x, bool) or x is None:
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise ValidationError("non-finite float cannot be serialized")
        s = "%.17g" % x
        if not any(ch in s for ch in ".en"):
            s += ".0"
        return s
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}" for k, v in x.items()) + "}"
    if isinstance(x, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_fmt(v) for v in x) + "]"
    raise TypeError(f"cannot serialize {type(x)}")


def dumps_json(doc):
    """JSON text with floats at 17 significant digits (bit-exact round trip)."""
    return _fmt(doc)


def circuit_to_dict(c, a):
    slots = []
    for s in c.slots:
        d = {"id": s.slot_id, "qubits": list(s.qubits), "kind": s.kind}
        if s.kind == "fixed":
            d["matrix"] = [[float(z.real), float(z.imag)] for z in s.gate.matrix.ravel()]
        else:
            d["group"] = s.group
        slots.append(d)
    doc = {"n": c.n_qubits, "slots": slots,
           "params": {str(g): [float(x) for x in a[g]] for g in sorted(a)}}
    if c.pooling:
        doc["pooling"] = [{"after": p.after, "measured": list(p.measured),
                           "targets": list(p.targets), "group0": p.group0,
                           "group1": p.group1} for p in c.pooling]
    return doc


def circuit_to_json(c, a):
    return dumps_json(circuit_to_dict(c, a))


def _need(d, key, typ, loc):
    if not isinstance(d, dict) or key not in d:
        raise ParseError(f"missing field {key!r}", loc)
    v = d[key]
    if typ is int and (isinstance(v, bool) or not isinstance(v, int)):
        raise ParseError(f"field {key!r} must be an integer", f"{loc}/{key}")
    if typ is list and not isinstance(v, list):
        raise ParseError(f"field {key!r} must be a list", f"{loc}/{key}")
    if typ is str and not isinstance(v, str):
        raise ParseError(f"field {key!r} must be a string", f"{loc}/{key}")
    if typ is dict and not isinstance(v, dict):
        raise ParseError(f"field {key!r} must be an object", f"{loc}/{key}")
    return v


def _ints(v, loc):
    if not isinstance(v, list) or any(isinstance(x, bool) or not isinstance(x, int) for x in v):
        raise ParseError("expected a list of integers", loc)
    return tuple(v)


def circuit_from_dict(doc):
    n = _need(doc, "n", int, "")
    slots = []
    for i, sd in enumerate(_need(doc, "slots", list, "")):
        loc = f"/slots/{i}"
        sid = _need(sd, "id", int, loc)
        q = _ints(_need(sd, "qubits", list, loc), loc + "/qubits")
        kind = _need(sd, "kind", str, loc)
        if kind == "fixed":
            flat = _need(sd, "matrix", list, loc)
            try:
                m = np.array([complex(float(re), float(im)) for re, im in flat])
                dim = int(round(math.sqrt(m.size)))
                gate = UnitaryGate(m.reshape(dim, dim))
            except (TypeError, ValueError) as exc:
                raise ParseError(f"bad matrix: {exc}", loc + "/matrix") from None
            slots.append(GateSlot(sid, q, "fixed", gate=gate))
        elif kind == "trainable":
            slots.append(GateSlot(sid, q, "trainable", group=_need(sd, "group", int, loc)))
        else:
            raise ParseError(f"unknown kind {kind!r}", loc + "/kind")
    pools = []
    for i, pd in enumerate(doc.get("pooling", []) or []):
        loc = f"/pooling/{i}"
        pools.append(PoolLayer(_need(pd, "after", int, loc),
                               _ints(_need(pd, "measured", list, loc), loc + "/measured"),
                               _ints(_need(pd, "targets", list, loc), loc + "/targets"),
                               _need(pd, "group0", int, loc), _need(pd, "group1", int, loc)))
    try:
        c = CircuitStructure(n, tuple(slots), tuple(pools))
    except ValidationError as exc:
        raise ParseError(str(exc), "/slots") from None
    a = {}
    for k, v in _need(doc, "params", dict, "").items():
        loc = f"/params/{k}"
        try:
            g = int(k)
            a[g] = np.array([float(x) for x in v])
        except (TypeError, ValueError):
            raise ParseError("bad parameter group", loc) from None
    ar = c.group_arity
    if set(a) != set(ar):
        raise ParseError("params must cover exactly the trainable groups", "/params")
    for g in a:
        if a[g].size != N_PARAMS[ar[g]]:
            raise ParseError(f"group {g} needs {N_PARAMS[ar[g]]} parameters", f"/params/{g}")
    return c, a


def circuit_from_json(text):
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, f"line {exc.lineno} column {exc.colno}") from None
    return circuit_from_dict(doc)


def circuits_equal(c1, a1, c2, a2):
    if c1 != c2 or set(a1) != set(a2):
        return False
    return all(np.array_equal(a1[g], a2[g]) for g in a1)
