"""Large-n limit of the output statistics.

Scaling ``lam = c/n`` turns the finite-n output laws into a Skellam-type
law ``q`` and a Laguerre-weighted law ``p``; their entropy gap decides the
sign of the limiting coherent information.
Run with ``python demos/03_limit_laws.py``.
"""

import numpy as np

from attenuator_lab.asymptotics import convergence_report, entropy_gap

for N, c in [(0.5, 1.0), (2.0, 3.0)]:
    print(f"N={N}, c={c}")
    for _, _, n, dq, dp in convergence_report(N, c, [50, 100, 200, 400]):
        print(f"  n={n:4d}  sup|P - q| = {dq:.3e}  sup|P - p| = {dp:.3e}")

print("entropy gap H(q) - H(p) with c = N + 1:")
for N in np.geomspace(0.05, 20, 6):
    print(f"  N={N:7.3f}  gap={entropy_gap(N, N + 1.0):+.5f} bits")
