"""Covering numbers, metric entropies, generalization bounds and sample complexity.

Two modes are available.  ``asymptotic`` evaluates the O(.) statements with
all hidden constants set to one.  ``proof_exact`` follows the explicit chain
gen <= 2 E_sigma + 3 C sqrt(2 ln(2/delta) / N) with the Dudley entropy
integral E_sigma <= (12 C / sqrt N) int_0^{1/2} sqrt(log N(eps)) d eps.
All logarithms are natural.
"""
from dataclasses import dataclass, field, replace
from functools import lru_cache
import math

import numpy as np
from scipy.integrate import quad

from .errors import InfeasibleError, ValidationError

MODES = ("asymptotic", "proof_exact")
TERM_NAMES = ("complexity", "use_count", "residual", "structure", "confidence", "shot")


@lru_cache(maxsize=None)
def dudley_i0():
    """I0 = int_0^{1/2} sqrt(ln(1/a)) da (about 0.62811)."""
    val, _ = quad(lambda a: math.sqrt(math.log(1.0 / a)), 0.0, 0.5, epsabs=1e-13, epsrel=1e-13)
    return val


def _lg(x):
    return math.log(max(x, 2))


def prefactor_unitary(kappa=2):
    return 2 * 2 ** (2 * kappa)


def prefactor_cptp(kappa=2):
    return 2 * 2 ** (4 * kappa)


def _check_eps(eps):
    if not 0 < eps <= 1:
        raise ValidationError("eps must lie in (0, 1]")


def covlog_unitary(T, eps, kappa=2):
    """log covering number of T-gate unitary circuits: 2 4^kappa T ln(12 T / eps)."""
    _check_eps(eps)
    if T < 1:
        raise ValidationError("T must be >= 1")
    return prefactor_unitary(kappa) * T * math.log(12 * T / eps)


def covlog_cptp(T, eps, M_t=None, kappa=2):
    """2 16^kappa (T ln(6 T / eps) + sum_t ln M_t) for T local channels."""
    _check_eps(eps)
    if T < 1:
        raise ValidationError("T must be >= 1")
    M_t = [1] * T if M_t is None else list(M_t)
    if any(m < 1 for m in M_t):
        raise ValidationError("M_t must be >= 1")
    return prefactor_cptp(kappa) * (T * math.log(6 * T / eps) + math.fsum(math.log(m) for m in M_t))


def covlog_opt(K, T, eps, M_t=None, c_t=None):
    """K ln T + K max c_t ln(1 + K max M_t / eps): maps where only K of T
    channels moved."""
    if not 0 <= K <= T:
        raise ValidationError("K must lie in [0, T]")
    if eps <= 0:
        raise ValidationError("eps must be positive")
    if K == 0:
        return 0.0
    m = max(M_t) if M_t else 1
    c = max(c_t) if c_t else 1024
    return K * math.log(T) + K * c * math.log(1 + K * m / eps)


@dataclass(frozen=True)
class BoundQuery:
    T: int
    N: int = None
    delta: float = 0.05
    C_loss: float = 1.0
    M_t: tuple = None
    Delta_t: tuple = None
    c_t: tuple = None
    G_T: float = 1
    sigma_est: float = None
    kappa: int = 2
    mode: str = "asymptotic"

    def __post_init__(self):
        if int(self.T) != self.T or self.T < 0:
            raise ValidationError("T must be a non-negative integer")
        if self.N is not None and self.N < 1:
            raise ValidationError("N must be >= 1")
        if not 0 < self.delta < 1:
            raise ValidationError("delta must lie in (0, 1)")
        if self.C_loss <= 0:
            raise ValidationError("C_loss must be positive")
        M = tuple([1] * self.T if self.M_t is None else self.M_t)
        c = tuple([1024] * self.T if self.c_t is None else self.c_t)
        if len(M) != self.T or any(m < 1 for m in M):
            raise ValidationError("M_t needs T entries >= 1")
        if len(c) != self.T or any(not 1 <= x <= 1024 for x in c):
            raise ValidationError("c_t needs T entries in [1, 1024]")
        if self.Delta_t is not None:
            D = tuple(float(x) for x in self.Delta_t)
            if len(D) != self.T:
                raise ValidationError("Delta_t needs T entries")
            if any(not 0 <= x <= 2 for x in D):
                raise ValidationError("Delta_t entries must lie in [0, 2]")
            if any(D[i] < D[i + 1] for i in range(len(D) - 1)):
                raise ValidationError("Delta_t must be sorted descending")
            object.__setattr__(self, "Delta_t", D)
        if self.G_T < 1:
            raise ValidationError("G_T must be >= 1")
        if self.sigma_est is not None and self.sigma_est < 1:
            raise ValidationError("sigma_est must be >= 1")
        if self.kappa < 1:
            raise ValidationError("kappa must be >= 1")
        if self.mode not in MODES:
            raise ValidationError(f"mode must be one of {MODES}")
        object.__setattr__(self, "M_t", M)
        object.__setattr__(self, "c_t", c)

    def with_(self, **kw):
        return replace(self, **kw)

    def _need_n(self):
        if self.N is None:
            raise ValidationError("N is required")
        return self.N


@dataclass(frozen=True)
class BoundReport:
    value: float
    optimal_K: int
    terms: dict = field(default_factory=dict)
    kind: str = ""

    def to_dict(self):
        return {"kind": self.kind, "value": self.value, "optimal_K": self.optimal_K,
                "terms": {k: self.terms.get(k, 0.0) for k in TERM_NAMES}}


def _report(kind, K, terms):
    full = {k: float(terms.get(k, 0.0)) for k in TERM_NAMES}
    return BoundReport(math.fsum(full.values()), K, full, kind)


def _confidence(q):
    N, C = q._need_n(), q.C_loss
    if q.mode == "asymptotic":
        return C * math.sqrt(math.log(1 / q.delta) / N)
    return 3 * C * math.sqrt(2 * math.log(2 / q.delta) / N)


def _fixed_terms(q):
    N, C, T = q._need_n(), q.C_loss, q.T
    slog_m = math.fsum(math.log(m) for m in q.M_t)
    if q.mode == "asymptotic":
        comp = C * math.sqrt(T * _lg(T) / N)
        use = C * math.sqrt(slog_m / N)
    else:
        p = prefactor_cptp(q.kappa)
        comp = 0.0 if T == 0 else 24 * C * math.sqrt(p * T / N) * (0.5 * math.sqrt(math.log(6 * T)) + dudley_i0())
        use = 12 * C * math.sqrt(p) * math.sqrt(slog_m / N)
    return {"complexity": comp, "use_count": use, "confidence": _confidence(q)}


def _structure(q):
    N, C = q._need_n(), q.C_loss
    if q.mode == "asymptotic":
        return C * math.sqrt(math.log(q.G_T) / N)
    # exact union bound over G_T architectures: delta -> delta / G_T
    return 3 * C * math.sqrt(2 / N) * (math.sqrt(math.log(2 * q.G_T / q.delta)) - math.sqrt(math.log(2 / q.delta)))


def _shot(q):
    if q.sigma_est is None:
        return 0.0
    C = q.C_loss
    if q.mode == "asymptotic":
        return C * math.sqrt(2 * math.log(1 / q.delta) / q.sigma_est)
    return C * math.sqrt(2 * math.log(2 / q.delta) / q.sigma_est)


def gen_bound_fixed(q):
    """Bound for T independently trained channels used M_t times each."""
    if q.Delta_t is not None and any(q.Delta_t):
        raise ValidationError("gen_bound_fixed takes no optimization distances")
    if q.G_T != 1:
        raise ValidationError("gen_bound_fixed needs G_T = 1; use gen_bound_variable")
    return _report("fixed", q.T, _fixed_terms(q))


def gen_bound_variable(q):
    """Fixed-structure bound plus the architecture-count term."""
    t = _fixed_terms(q)
    t["structure"] = _structure(q)
    return _report("variable", q.T, t)


def _residuals(q):
    D = q.Delta_t or (0.0,) * q.T
    # residual[K] = sum_{k > K} M_k Delta_k  (1-based k; Delta sorted descending)
    res = [0.0] * (q.T + 1)
    for K in range(q.T - 1, -1, -1):
        res[K] = res[K + 1] + q.M_t[K] * D[K]
    return res


def _opt_terms_asymptotic(q, K, res):
    N, C = q._need_n(), q.C_loss
    return {"complexity": C * math.sqrt(K * _lg(q.T) / N),
            "use_count": C * math.sqrt(math.fsum(math.log(m) for m in q.M_t[:K]) / N),
            "residual": C * res[K],
            "confidence": _confidence(q)}


def _opt_terms_exact(q, K, res):
    N, C = q._need_n(), q.C_loss
    r = res[K]
    if r >= 0.5 and r > 0:
        return None
    upper = 0.5 - r

    def integrand(b):
        return math.sqrt(covlog_opt(K, q.T, b, q.M_t, q.c_t))
    integral = 0.0 if K == 0 else quad(integrand, 0.0, upper, limit=200, epsabs=1e-12, epsrel=1e-12)[0]
    conf = 3 * C * math.sqrt(2 * math.log(2 * (q.T + 1) / q.delta) / N)
    return {"complexity": 24 * C / math.sqrt(N) * integral, "residual": 8 * C * r, "confidence": conf}


def opt_objective(q, K):
    """f(K) term dict, or None when K is not admissible."""
    if not 0 <= K <= q.T:
        raise ValidationError("K out of range")
    res = _residuals(q)
    if q.mode == "asymptotic":
        return _opt_terms_asymptotic(q, K, res)
    return _opt_terms_exact(q, K, res)


def gen_bound_opt(q, force_K=None):
    """min over K of f(K); ties resolved towards the smallest K."""
    best = None
    Ks = range(q.T + 1) if force_K is None else [force_K]
    for K in Ks:
        t = opt_objective(q, K)
        if t is None:
            continue
        rep = _report("opt", K, t)
        if best is None or rep.value < best.value:
            best = rep
    return best


def gen_bound_mother(q, force_K=None):
    """Optimization-dependent bound plus structure and shot terms."""
    rep = gen_bound_opt(q, force_K)
    t = dict(rep.terms)
    t["structure"] = _structure(q)
    t["shot"] = _shot(q)
    return _report("mother", rep.optimal_K, t)


BOUNDS = {"fixed": gen_bound_fixed, "variable": gen_bound_variable,
          "opt": gen_bound_opt, "mother": gen_bound_mother}


def sample_complexity(eps_target, q, which="fixed", n_max=2 ** 62, force_K=None):
    """Smallest N with bound(N) <= eps_target (doubling, then bisection).

    ``force_K`` pins K for the opt/mother bounds; the residual sum over the
    unlearned channels then puts a floor under the bound that more data
    cannot remove, reported as InfeasibleError.
    """
    if eps_target <= 0:
        raise ValidationError("eps_target must be positive")
    fn = BOUNDS[which]
    kw = {} if force_K is None else {"force_K": force_K}

    def val(N):
        rep = fn(q.with_(N=int(N)), **kw)
        return math.inf if rep is None else rep.value

    if val(1) <= eps_target:
        return 1
    floor = val(n_max)
    if floor > eps_target:
        raise InfeasibleError(f"bound stays above {eps_target} (value {floor:.6g} at N={n_max})", floor)
    hi = 2
    while val(hi) > eps_target:
        hi *= 2
    lo = hi // 2
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if val(mid) <= eps_target:
            hi = mid
        else:
            lo = mid
    return hi


def _spectral_norm_2x2(d):
    """Largest singular value of each 2x2 matrix in the stack ``d``."""
    f = np.sum(np.abs(d) ** 2, axis=(1, 2))
    det = np.abs(d[:, 0, 0] * d[:, 1, 1] - d[:, 0, 1] * d[:, 1, 0]) ** 2
    return np.sqrt(np.maximum(0.5 * (f + np.sqrt(np.maximum(f * f - 4 * det, 0.0))), 0.0))


def haar_unitaries_2(count, rng):
    z = (rng.standard_normal((count, 2, 2)) + 1j * rng.standard_normal((count, 2, 2))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    dg = np.diagonal(r, axis1=1, axis2=2)
    return q * (dg / np.abs(dg))[:, None, :]


@dataclass(frozen=True)
class NetReport:
    size: int
    max_uncovered: float
    bound: float
    assignment: np.ndarray = None


def empirical_net_1qubit(eps, sample_count, rng):
    """Greedy farthest-point eps-net over Haar 1-qubit unitaries (spectral norm).

    Returns a NetReport with the net size, the largest distance from a sample
    to its nearest net element (<= eps by construction), and (6/eps)^8.
    """
    _check_eps(eps)
    us = haar_unitaries_2(int(sample_count), rng)
    dmin = _spectral_norm_2x2(us - us[0])
    owner = np.zeros(len(us), dtype=int)
    size = 1
    while True:
        j = int(np.argmax(dmin))
        if dmin[j] <= eps:
            break
        d = _spectral_norm_2x2(us - us[j])
        closer = d < dmin
        owner[closer] = j
        dmin = np.where(closer, d, dmin)
        size += 1
    # recheck coverage against the assigned net element directly
    recheck = _spectral_norm_2x2(us - us[owner])
    return NetReport(size, float(recheck.max()), (6.0 / eps) ** 8, owner)
