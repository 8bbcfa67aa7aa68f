# How the generalization bounds move with N, T, reuse counts and optimization distances.
from vqcgenlab.bounds import (BoundQuery, gen_bound_fixed, gen_bound_mother, gen_bound_opt,
                              sample_complexity)
from vqcgenlab.circuits import build_qcnn

print("fixed structure, T=8:")
for N in (100, 400, 1600, 6400):
    r = gen_bound_fixed(BoundQuery(T=8, N=N))
    print(f"  N={N:5d}  value={r.value:.4f}  " + "  ".join(f"{k}={v:.4f}" for k, v in r.terms.items() if v))

# few gates moved far: the optimum keeps only those in the complexity term
q = BoundQuery(T=20, N=500, Delta_t=(0.5, 0.3) + (1e-4,) * 18)
r = gen_bound_opt(q)
print(f"\noptimization-aware: K*={r.optimal_K}  value={r.value:.4f}  "
      f"(fixed: {gen_bound_fixed(q.with_(Delta_t=None)).value:.4f})")

# QCNN: T grows like log n, and so does the data needed
for n in (8, 16, 32, 64):
    c = build_qcnn(n)
    M = c.use_counts
    q = BoundQuery(T=c.T, M_t=tuple(M[g] for g in c.groups))
    print(f"QCNN n={n:2d}: T={c.T:2d}  N for bound 0.1: {sample_complexity(0.1, q)}")

full = BoundQuery(T=9, N=100, M_t=(16, 8, 8, 8, 4, 4, 4, 2, 2), Delta_t=(0,) * 9, sigma_est=8192)
print("\nmother bound with shot noise:", gen_bound_mother(full).to_dict())
