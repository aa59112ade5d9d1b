"""Comparing chain convergence with the Gelman-Rubin diagnostic.

Runs the add-delete and projection chains from many seeds on two kernel
families and reports how many iterations each needs before the potential
scale reduction factor (PSRF) of the sample cardinality drops below 1.05:

* an RBF kernel, where the less lazy add-delete chain crosses first, and
* a two-level spectrum kernel (half the eigenvalues huge, half tiny), the
  adversarial family for single-site chains.

Run:  python3 demos/03_convergence_comparison.py
"""
import numpy as np

from srmcmc import (ChainSpec, iterations_to_threshold, rbf_kernel,
                    run_chains, spectrum_step_kernel)

rng = np.random.default_rng(0)
kernels = [
    ("rbf (N=60)", rbf_kernel(rng.random((60, 5)), 0.5)),
    ("spectrum-step (N=60, k=30, 500/0.002)",
     spectrum_step_kernel(60, 30, 500.0, 1.0 / 500.0, rng)),
]

steps, thin, n_chains = 100_000, 10, 8
print(f"{n_chains} chains x {steps} steps, PSRF on |S|, threshold 1.05\n")
for label, m in kernels:
    print(label)
    for kind in ("add-delete", "projection"):
        spec = ChainSpec(kind, steps=steps, thin=thin, seed=2024)
        trs = run_chains(m, spec, n_chains)
        hit = iterations_to_threshold(trs, "cardinality")
        shown = "never" if hit is None else f"{hit * thin:,} iterations"
        print(f"  {kind:>10}: threshold reached after {shown}")
    print()

print("The projection chain pays for its branch laziness on easy kernels but")
print("its guarantees do not degrade on the two-level spectrum; compare the")
print("per-statistic crossings in comparison.csv from `srmcmc compare`.")
