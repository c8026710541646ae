"""How circuit power erodes throughput and who pays for it.

Sweeps ``p_c`` for the five-user network with a short horizon (a few
seconds) and prints sum rate and Jain's index for both protocols.  The full
sweep with plots is ``wpcn fig1``.

    python demos/circuit_power_tradeoff.py
"""

from wpcn.experiments import fig1_spec, read_table, run_fig1_experiment

spec = fig1_spec(M=10_000, seeds=(1,), K_values=(5,))
rows = read_table(run_fig1_experiment(spec))

print("p_c       mode     sum rate   Jain")
for r in sorted(rows, key=lambda r: (r["p_c"], r["mode"])):
    print(f"{r['p_c']:<8g}  {r['mode']:<7s}  {r['sum_rate']:.4f}     {r['jain']:.4f}")
