"""The online protocol learns its energy price from the budget alone.

A PF run and a sum-rate run over 20000 epochs start from ``lam = 0``.  The
running average BS power converges to ``P_avg`` and the two runs trade
fairness for throughput.

    python demos/online_protocol.py
"""

import numpy as np

from wpcn import DEFAULT_DISTANCES, NetworkConfig, calibrate_lambda_offline, run, run_fixed_lambda, sample_trace

cfg = NetworkConfig(distances=DEFAULT_DISTANCES, p_c=1e-5, P_avg=1.0, P_max=5.0)
M = 20_000

for mode in ("pf", "maxsum"):
    res = run(cfg, M, seed=3, mode=mode)
    spend = np.cumsum(res.p0 * res.tau0) / np.arange(1, M + 1)
    checkpoints = ", ".join(f"{n}: {spend[n - 1]:.3f}" for n in (100, 1000, 10_000, M))
    print(f"{mode:6s}  running BS power  {checkpoints}")
    print(f"        final price {res.lambda_hat[-1]:.4f}, sum rate {res.sum_rate:.4f}, "
          f"Jain {res.jain:.4f}")
    print("        per-user rates", np.array2string(res.rates, precision=4))

# offline: pick the price on a known trace, then replay it
trace = sample_trace(3, cfg, M)
lam = calibrate_lambda_offline(cfg, trace)
fixed = run_fixed_lambda(cfg, lam, trace=trace)
print(f"\noffline price {lam:.4f} gives average BS power {fixed.avg_bs_power:.5f}")
