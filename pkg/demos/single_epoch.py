"""One epoch of the closed-form allocator, checked against the grid oracle.

Five users at 8..16 m draw one Rayleigh fading realisation.  We price BS
energy at a few values of ``lam`` and watch the BS go from charging to
silent, then compare the closed form with a brute-force grid search on the three
nearest users (the grid search is limited to three).

    python demos/single_epoch.py
"""

import numpy as np

from wpcn import (
    DEFAULT_DISTANCES,
    NetworkConfig,
    allocate_epoch,
    epoch_lagrangian,
    grid_search_epoch,
    sample_epoch,
    verify_kkt,
)

cfg = NetworkConfig(distances=DEFAULT_DISTANCES, p_c=1e-5)
ch = sample_epoch(7, cfg, 0)
Rbar = np.ones(cfg.K)

print("lam       p_0   tau_0    tau_1..tau_5                       sum rate")
for lam in (0.01, 0.05, 0.1, 0.2, 0.3):
    alloc, ws = allocate_epoch(ch, cfg, lam, Rbar)
    taus = " ".join(f"{t:.3f}" for t in alloc.tau)
    print(f"{lam:<8g}  {alloc.p_0:<4g}  {alloc.tau_0:.4f}   {taus}   {alloc.r.sum():.4f}")

# a price where the BS transmits: KKT residuals and the grid oracle
lam = 0.1
alloc, ws = allocate_epoch(ch, cfg, lam, Rbar)
print(f"\nKKT max residual at lam={lam}: {verify_kkt(alloc, ws, ch, cfg).max_residual:.1e}")

cfg = cfg.replace(distances=DEFAULT_DISTANCES[:3])
ch = sample_epoch(7, cfg, 0)
Rbar = np.ones(cfg.K)
alloc, ws = allocate_epoch(ch, cfg, lam, Rbar)
L = epoch_lagrangian(alloc.tau_0, alloc.tau, alloc.e, ch, cfg, lam, Rbar)
g = grid_search_epoch(ch, cfg, lam, Rbar)
print(f"closed form L = {L:.10f}")
print(f"grid search L = {g.objective:.10f}  (relative gap {abs(g.objective - L) / abs(L):.1e})")
