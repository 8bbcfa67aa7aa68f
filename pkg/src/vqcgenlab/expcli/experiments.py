"""Experiment drivers behind the CLI subcommands.

Each driver takes a config dict, the seed list and an output directory, writes
``runs.csv`` (plus command specific files) and ``summary.json``, and returns
the summary.  Every (seed, n, N, ...) cell draws its training data, test data
and optimizer randomness from separate named streams of the seed.
"""
from concurrent.futures import ProcessPoolExecutor
import logging
import math
import os
from pathlib import Path
import time

import numpy as np

from ..backends import (HamiltonianSpec, cluster_ground_state, mps_random, mps_to_dense)
from ..backends.qcnn import qcnn_forward_exact_batch
from ..bounds import BOUNDS, BoundQuery, gen_bound_mother
from ..channels import diamond_distance_unitary
from ..circuits import (build_qcnn, build_qft, circuit_to_json, gate_matrix, perturb_near_solution,
                        qft_matrix, to_trainable, unitary_of)
from ..errors import ValidationError
from ..learning import (SPSAConfig, VansConfig, compiling_risk, delta_distances,
                        environment_sweep, min_prob_decode, phase_free_frobenius,
                        spsa_minimize, vans_optimize)
from ..numkit import haar_state, stream
from .records import write_csv, write_json
from .regions import LABEL_BITS, PhaseRegions

log = logging.getLogger(__name__)

RUN_HEADER = ["seed", "n", "N", "distribution", "train_risk", "test_risk", "gap",
              "bound_value", "success_frobenius", "success_train", "gates", "T"]


def thread_count(requested=None):
    env = os.environ.get("VQCGENLAB_THREADS")
    if env:
        return max(1, int(env))
    return max(1, int(requested or 1))


def _pmap(fn, items, threads):
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def _need(cfg, key, default=None):
    if key in cfg:
        return cfg[key]
    if default is None:
        raise ValidationError(f"config lacks {key!r}")
    return default


# --- data -------------------------------------------------------------------

def sample_states(dist, n, count, rng, chi=2):
    """(2^n, count) array of input states from the named distribution."""
    d = 2 ** n
    if dist == "basis":
        if count > d:
            raise ValidationError(f"cannot draw {count} distinct basis states for n={n}")
        idx = rng.choice(d, size=count, replace=False)
        return np.eye(d, dtype=complex)[:, idx]
    if dist == "haar":
        return np.column_stack([haar_state(d, rng) for _ in range(count)])
    if dist.startswith("mps_chi"):
        chi = int(dist[len("mps_chi"):]) if dist != "mps_chi" else chi
        return np.column_stack([mps_to_dense(mps_random(n, chi, rng)) for _ in range(count)])
    raise ValidationError(f"unknown distribution {dist!r}")


def fidelity_risk(v, psis, phis):
    z = np.einsum("ri,ri->i", phis.conj(), v @ psis)
    return float(max(0.0, 1.0 - np.mean(np.abs(z) ** 2)))


def _bound_for(T, N, deltas, M_t=None, G_T=1, sigma=None, mode="asymptotic", delta=0.05):
    if T == 0:
        return gen_bound_mother(BoundQuery(T=0, N=N, delta=delta, G_T=G_T, mode=mode)).value
    q = BoundQuery(T=T, N=N, delta=delta, M_t=M_t, Delta_t=tuple(min(2.0, d) for d in deltas),
                   G_T=G_T, sigma_est=sigma, mode=mode)
    return gen_bound_mother(q).value


# --- compile scan -------------------------------------------------------------

def _compile_cell(args):
    cfg, seed, n, N, dist = args
    t0 = time.perf_counter()
    u = qft_matrix(n)
    psis = sample_states(dist, n, N, stream(seed, "train", n, N, dist))
    test = sample_states(cfg.get("test_distribution", dist) if dist != "basis" else "haar",
                         n, int(cfg.get("n_test", 20)), stream(seed, "test", n, N, dist))
    vcfg = VansConfig.from_dict(cfg.get("vans"))
    if cfg.get("init") == "exact":
        c0, a0 = to_trainable(build_qft(n))
        vcfg.init_structure, vcfg.init_assignment = c0, a0
    res = vans_optimize(psis, u @ psis, vcfg, stream(seed, "vans", n, N, dist), n_qubits=n)
    c, a = res.structure, res.assignment
    v = unitary_of(c, a)
    train = compiling_risk(c, a, psis, u @ psis)
    test_risk = fidelity_risk(v, test, u @ test)
    frob = phase_free_frobenius(u, v)
    accepted = sum(1 for e in res.edit_log if e["accepted"])
    row = {"seed": seed, "n": n, "N": N, "distribution": dist, "train_risk": train,
           "test_risk": test_risk, "gap": test_risk - train,
           "bound_value": _bound_for(c.T, N, res.deltas, G_T=1 + accepted),
           "success_frobenius": frob < cfg.get("frobenius_threshold", 1e-5),
           "success_train": train < cfg.get("train_threshold", 1e-8),
           "gates": c.gate_count, "T": c.T, "frobenius": frob}
    return row, circuit_to_json(c, a), 1e3 * (time.perf_counter() - t0)


def _decided(succ, fail, ks, total):
    """True once every k-of-total success question is settled."""
    return all(succ >= k or fail > total - k for k in ks)


def compile_scan(cfg, seeds, out, threads=1):
    ns = _need(cfg, "n")
    dists = _need(cfg, "distributions", ["basis"])
    k_cfg = cfg.get("k_success", [1, 7])
    early = bool(cfg.get("early_exit", False))
    if any(n > 6 for n in ns):
        raise ValidationError("compile-scan verifies with dense unitaries; n <= 6")
    out = Path(out)
    (out / "circuits").mkdir(parents=True, exist_ok=True)
    rows, timings, summary = [], [], {"N_min": {}, "budget_exhausted": False}
    # optional wall-clock budget: cells not started in time are skipped and
    # their N_min stays undecided
    budget = cfg.get("time_budget_s")
    t_start = time.perf_counter()

    def out_of_time():
        return budget is not None and time.perf_counter() - t_start > budget

    for dist in dists:
        # k_success may be a list or a per-distribution mapping
        ks = k_cfg.get(dist, [1, 7]) if isinstance(k_cfg, dict) else k_cfg
        for n in ns:
            Ns = cfg.get("N", {}).get(dist) if isinstance(cfg.get("N"), dict) else cfg.get("N")
            Ns = Ns or [2 ** k for k in range(n + 1)]
            nmin = {str(k): None for k in ks}
            for N in Ns:
                if dist == "basis" and N > 2 ** n:
                    continue
                if out_of_time():
                    summary["budget_exhausted"] = True
                    break
                cells = [(cfg, s, n, N, dist) for s in seeds]
                succ = fail = 0
                if early:
                    results = []
                    for cell in cells:
                        if out_of_time():
                            summary["budget_exhausted"] = True
                            break
                        r = _compile_cell(cell)
                        results.append(r)
                        ok = r[0]["success_frobenius"] and r[0]["success_train"]
                        succ, fail = succ + ok, fail + (not ok)
                        if _decided(succ, fail, [k for k in ks if nmin[str(k)] is None], len(seeds)):
                            break
                else:
                    results = _pmap(_compile_cell, cells, threads)
                    for r in results:
                        ok = r[0]["success_frobenius"] and r[0]["success_train"]
                        succ, fail = succ + ok, fail + (not ok)
                for row, circ, ms in results:
                    rows.append(row)
                    timings.append({"seed": row["seed"], "n": n, "N": N, "distribution": dist,
                                    "wall_ms": ms})
                    name = f"{dist}_n{n}_N{N}_seed{row['seed']}.json"
                    (out / "circuits" / name).write_text(circ + "\n")
                for k in ks:
                    if nmin[str(k)] is None and succ >= k:
                        nmin[str(k)] = N
                log.info("compile-scan %s n=%d N=%d: %d/%d successes", dist, n, N, succ,
                         succ + fail)
                if early and all(v is not None for v in nmin.values()):
                    break
            summary["N_min"].setdefault(dist, {})[str(n)] = nmin
    rows.sort(key=lambda r: (r["distribution"], r["n"], r["N"], r["seed"]))
    write_csv(out / "runs.csv", RUN_HEADER + ["frobenius"], rows)
    write_csv(out / "timings.csv", ["seed", "n", "N", "distribution", "wall_ms"], timings)
    write_json(out / "summary.json", summary)
    return summary


# --- near solution -------------------------------------------------------------

def _near_cell(args):
    cfg, seed, n, N = args
    t0 = time.perf_counter()
    eps = float(cfg.get("eps", 0.1))
    chi_tr, chi_te = int(cfg.get("chi_train", 2)), int(cfg.get("chi_test", 10))
    u = qft_matrix(n)
    c, a_exact = to_trainable(build_qft(n))
    a0 = (perturb_near_solution(c, a_exact, eps, stream(seed, "perturb", n, N))
          if eps > 0 else dict(a_exact))
    psis = sample_states(f"mps_chi{chi_tr}", n, N, stream(seed, "train", n, N))
    test = sample_states(f"mps_chi{chi_te}", n, int(cfg.get("n_test", 20)), stream(seed, "test", n, N))
    if eps > 0:
        a, _ = environment_sweep(c, a0, psis, u @ psis, sweeps=int(cfg.get("sweeps", 500)),
                                 target=float(cfg.get("sweep_target", 1e-14)),
                                 rel_tol=float(cfg.get("sweep_rel_tol", 1e-12)))
    else:
        a = a0
    v = unitary_of(c, a)
    train = fidelity_risk(v, psis, u @ psis)
    test_risk = fidelity_risk(v, test, u @ test)
    deltas = delta_distances(c, a0, a)
    row = {"seed": seed, "n": n, "N": N, "distribution": f"mps_chi{chi_tr}",
           "train_risk": train, "test_risk": test_risk, "gap": test_risk - train,
           "bound_value": _bound_for(c.T, N, deltas),
           "success_frobenius": phase_free_frobenius(u, v) < cfg.get("frobenius_threshold", 1e-5),
           "success_train": train < cfg.get("train_threshold", 1e-8),
           "gates": c.gate_count, "T": c.T}
    return row, 1e3 * (time.perf_counter() - t0)


def near_solution(cfg, seeds, out, threads=1):
    ns = _need(cfg, "n")
    if any(n > 12 for n in ns):
        raise ValidationError("near-solution is capped at n <= 12")
    cells = [(cfg, s, n, N) for n in ns for N in _need(cfg, "N", [1, 2]) for s in seeds]
    results = _pmap(_near_cell, cells, threads)
    rows = [r for r, _ in results]
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows.sort(key=lambda r: (r["n"], r["N"], r["seed"]))
    write_csv(out / "runs.csv", RUN_HEADER, rows)
    write_csv(out / "timings.csv", ["seed", "n", "N", "wall_ms"],
              [{"seed": r["seed"], "n": r["n"], "N": r["N"], "wall_ms": ms} for r, ms in results])
    tt, te = cfg.get("train_threshold", 1e-8), cfg.get("test_threshold", 1e-4)
    summary = {}
    for n in ns:
        for N in _need(cfg, "N", [1, 2]):
            sel = [r for r in rows if r["n"] == n and r["N"] == N]
            summary[f"n{n}_N{N}"] = {
                "runs": len(sel),
                "train_ok": sum(r["train_risk"] < tt for r in sel),
                "train_and_test_ok": sum(r["train_risk"] < tt and r["test_risk"] < te for r in sel),
                "median_test_risk": float(np.median([r["test_risk"] for r in sel])),
            }
    write_json(out / "summary.json", summary)
    return summary


# --- phase classification -------------------------------------------------------

def qcnn_theta_map(c):
    """Flat-vector <-> assignment helpers for the QCNN groups."""
    ar = c.group_arity
    sizes = [15 if ar[g] == 2 else 3 for g in c.groups]
    offs = np.cumsum([0] + sizes)

    def to_assignment(theta):
        return {g: theta[offs[i]:offs[i + 1]] for i, g in enumerate(c.groups)}
    return int(offs[-1]), to_assignment


class GroundStateCache:
    def __init__(self, n, tol=1e-10):
        self.n, self.tol, self._c = n, tol, {}

    def __call__(self, pt):
        key = (round(pt[0], 12), round(pt[1], 12))
        if key not in self._c:
            self._c[key] = cluster_ground_state(HamiltonianSpec(self.n, *key), tol=self.tol).amplitudes
        return self._c[key]


def _accuracy(probs, labels, shots, rng):
    """Fraction of states whose min-count decode at ``shots`` equals the label."""
    hits = 0
    for p, y in zip(probs, labels):
        counts = rng.multinomial(shots, p / p.sum())
        hits += min_prob_decode(counts) == LABEL_BITS[y]
    return hits / len(labels)


def _slope(x, y):
    x, y = np.asarray(x, float), np.asarray(y, float)
    if np.ptp(x) == 0:
        return 0.0
    return float(np.polyfit(x, y, 1)[0])


def _phase_cell(args):
    cfg, seed, N, regions_doc = args
    t0 = time.perf_counter()
    n = int(_need(cfg, "n"))
    regions = PhaseRegions.from_config(regions_doc)
    margin = float(cfg.get("margin", 0.3))
    shots = int(cfg.get("shots", 8192))
    gs = GroundStateCache(n)
    train_pts = regions.sample(N, stream(seed, "train_points", N), margin)
    xs = np.column_stack([gs(p) for p, _ in train_pts])
    ys = [LABEL_BITS[lb] for _, lb in train_pts]
    yidx = np.array([int(y, 2) for y in ys])
    grid = [(p, lb) for p, lb in regions.grid(int(cfg.get("test_grid", 20))) if lb is not None]
    xt = np.column_stack([gs(p) for p, _ in grid])
    c = build_qcnn(n)
    dim, to_a = qcnn_theta_map(c)
    rng_opt = stream(seed, "spsa", N)
    theta0 = rng_opt.uniform(-np.pi, np.pi, dim) * float(cfg.get("init_scale", 1.0))
    noise = stream(seed, "shots", N)
    w_mis = float(cfg.get("misclass_weight", 0.0))
    cols = np.arange(len(ys))

    def risk(theta, shots_now=None):
        """Empirical risk plus ``w_mis`` times the misclassified fraction."""
        p = qcnn_forward_exact_batch(xs, c, to_a(theta))
        if shots_now is not None:
            p = np.column_stack([noise.multinomial(int(shots_now), q / q.sum()) for q in p.T]) / shots_now
        r = float(np.mean(p[yidx, cols]))
        if w_mis:
            r += w_mis * float(np.mean(np.argmin(p, axis=0) != yidx))
        return r

    acc_rng = stream(seed, "eval_shots", N)

    def snapshot(k, theta, shots_now):
        a = to_a(theta)
        ptr = qcnn_forward_exact_batch(xs, c, a).T
        pte = qcnn_forward_exact_batch(xt, c, a).T
        return {"iteration": k + 1,
                "train_accuracy": _accuracy(ptr, [lb for _, lb in train_pts], shots, acc_rng),
                "test_accuracy": _accuracy(pte, [lb for _, lb in grid], shots, acc_rng),
                "shots": shots_now}

    scfg = SPSAConfig.from_dict(cfg.get("spsa"))
    res = spsa_minimize(risk, theta0, scfg, rng_opt, callback=snapshot)
    a = to_a(res.theta)
    test_labels = np.array([int(LABEL_BITS[lb], 2) for _, lb in grid])
    train_risk = float(np.mean(qcnn_forward_exact_batch(xs, c, a)[yidx, cols]))
    test_risk = float(np.mean(qcnn_forward_exact_batch(xt, c, a)[test_labels, np.arange(len(grid))]))
    deltas, M_t = group_deltas(c, to_a(theta0), a)
    sigma = None if scfg.shots0 is None else len(ys) * shots
    row = {"seed": seed, "n": n, "N": N, "distribution": "phase_regions",
           "train_risk": train_risk, "test_risk": test_risk, "gap": test_risk - train_risk,
           "bound_value": _bound_for(c.T, N, deltas, M_t=M_t, sigma=sigma),
           "success_frobenius": None, "success_train": None, "gates": c.gate_count, "T": c.T}
    snaps = [dict(s, seed=seed, N=N) for s in res.snapshots]
    return row, snaps, 1e3 * (time.perf_counter() - t0)


def group_deltas(c, a0, a):
    """Per-group (Delta_t, M_t) sorted by descending Delta_t."""
    ar, M = c.group_arity, c.use_counts
    pairs = [(diamond_distance_unitary(gate_matrix(a0[g], ar[g]), gate_matrix(a[g], ar[g])), M[g])
             for g in c.groups]
    pairs.sort(key=lambda x: -x[0])
    return tuple(d for d, _ in pairs), tuple(m for _, m in pairs)


def phase(cfg, seeds, out, threads=1):
    n = int(_need(cfg, "n"))
    if n not in (4, 8, 16):
        raise ValidationError("phase task needs n in {4, 8, 16}")
    regions_doc = _need(cfg, "regions_config")
    Ns = _need(cfg, "N", [4, 8, 16])
    cells = [(cfg, s, N, regions_doc) for N in Ns for s in seeds]
    results = _pmap(_phase_cell, cells, threads)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    rows = sorted((r for r, _, _ in results), key=lambda r: (r["N"], r["seed"]))
    snaps = sorted((s for _, ss, _ in results for s in ss),
                   key=lambda s: (s["N"], s["seed"], s["iteration"]))
    write_csv(out / "runs.csv", RUN_HEADER, rows)
    write_csv(out / "snapshots.csv", ["seed", "N", "iteration", "shots", "train_accuracy",
                                      "test_accuracy"], snaps)
    write_csv(out / "timings.csv", ["seed", "N", "wall_ms"],
              [{"seed": r["seed"], "N": r["N"], "wall_ms": ms} for r, _, ms in results])
    summary = {"slopes": {}, "final_test_accuracy": {}}
    for N in Ns:
        sel = [s for s in snaps if s["N"] == N]
        summary["slopes"][str(N)] = _slope([s["train_accuracy"] for s in sel],
                                           [s["test_accuracy"] for s in sel])
        finals = [max((s for s in sel if s["seed"] == sd), key=lambda s: s["iteration"])
                  for sd in seeds if any(s["seed"] == sd for s in sel)]
        summary["final_test_accuracy"][str(N)] = float(np.mean([f["test_accuracy"] for f in finals])) if finals else math.nan
    write_json(out / "summary.json", summary)
    return summary


# --- bounds report --------------------------------------------------------------

QUERY_FIELDS = ("T", "N", "delta", "C_loss", "M_t", "Delta_t", "c_t", "G_T", "sigma_est",
                "kappa", "mode")


def bounds_rows(cfg):
    """[(label, BoundReport)] for every applicable bound of the query."""
    doc = {k: cfg[k] for k in QUERY_FIELDS if k in cfg}
    for k in ("M_t", "Delta_t", "c_t"):
        if doc.get(k) is not None:
            doc[k] = tuple(doc[k])
    rows = []
    if "T" in doc:
        q = BoundQuery(**doc)
        base = q.with_(Delta_t=None, G_T=1)
        rows.append(("fixed", BOUNDS["fixed"](base)))
        if "G_T" in cfg:
            rows.append(("variable", BOUNDS["variable"](q.with_(Delta_t=None))))
        if q.Delta_t is not None:
            rows.append(("opt", BOUNDS["opt"](q.with_(G_T=1))))
        rows.append(("mother", BOUNDS["mother"](q)))
    for n in cfg.get("qcnn_n", []):
        c = build_qcnn(int(n))
        M = c.use_counts
        qd = {k: v for k, v in doc.items() if k not in ("T", "M_t", "Delta_t", "c_t", "G_T")}
        q = BoundQuery(T=c.T, M_t=tuple(M[g] for g in c.groups), **qd)
        rows.append((f"qcnn_n{n}", BOUNDS["fixed"](q)))
    return rows


def render_table(rows):
    from ..bounds import TERM_NAMES
    head = ["bound", "value", "K"] + list(TERM_NAMES)
    lines = [[lb, "%.6g" % r.value, str(r.optimal_K)] + ["%.6g" % r.terms[t] for t in TERM_NAMES]
             for lb, r in rows]
    width = [max(len(x) for x in col) for col in zip(head, *lines)]
    fmt = "  ".join("{:>%d}" % w for w in width)
    return "\n".join(fmt.format(*r) for r in [head] + lines) + "\n"


def bounds_report(cfg, seeds, out, threads=1):
    rows = bounds_rows(cfg)
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    doc = {lb: r.to_dict() for lb, r in rows}
    write_json(out / "bounds.json", doc)
    (out / "bounds.txt").write_text(render_table(rows))
    from ..bounds import TERM_NAMES
    write_csv(out / "runs.csv", ["bound", "value", "optimal_K"] + list(TERM_NAMES),
              [dict(bound=lb, value=r.value, optimal_K=r.optimal_K, **r.terms) for lb, r in rows])
    write_json(out / "summary.json", {"bounds": {lb: r.value for lb, r in rows}})
    return doc
