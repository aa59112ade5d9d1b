"""Exact small-instance verification, end to end.

Enumerates a two-element L-ensemble, builds the exact one-step transition
matrices of all three chains, and confirms stationarity and detailed balance.
Also shows the delete-factor correction in the projection chain: the printed
form of the acceptance factor leaves a residual of order 1e-1, the corrected
form is stationary to machine precision, and the chain lumped down from the
exchange walk on the symmetric homogenization matches the projection chain
entrywise.

Run:  python3 demos/01_exact_verification.py
"""
import numpy as np

from srmcmc import (LEnsemble, detailed_balance_check, enumerate_distribution,
                    exact_marginals, lumped_exchange_matrix,
                    stationarity_check, transition_matrix)

m = LEnsemble(np.diag([2.0, 3.0]))
dist = enumerate_distribution(m)

print("ground set N = 2, L = diag(2, 3)")
print("exact distribution over subsets (by bitmask):", dist.probs)
print("exact inclusion marginals:", exact_marginals(dist))
print()

for kind in ("add-delete", "projection"):
    tm = transition_matrix(m, kind)
    print(f"{kind:>10}: stationarity residual {stationarity_check(tm, dist):.3e}, "
          f"detailed balance {detailed_balance_check(tm, dist):.3e}")

tm = transition_matrix(m, "exchange", cardinality=1)
print(f"{'exchange':>10}: stationarity residual {stationarity_check(tm, dist):.3e} "
      "(on the |S| = 1 shell)")
print()

literal = transition_matrix(m, "projection", paper_literal_delete=True)
print("projection with the literal delete factor |S|/(N-|S|+1):")
print(f"  stationarity residual {stationarity_check(literal, dist):.3e}  "
      "<- not stationary")
print("with the corrected factor (N-|S|+1)/|S| the residual above is ~1e-17.")
print()

lumped = lumped_exchange_matrix(m)
proj = transition_matrix(m, "projection")
print("exchange walk on the symmetric homogenization, lumped to base subsets:")
print(f"  max |lumped - projection| = {np.max(np.abs(lumped.P - proj.P)):.3e}")
