"""Shrink N at fixed noise and the quantum relaxation time blows up.

Run:  python3 demos/02_quantum_limit.py

When eps*N is small the quantum noise barely touches any mode, so every
map takes a very long time to relax.  The map-independent lower bound
ceil(1 / -ln min|gamma|) already shows the effect.
"""

import math

from toral_relax.noise import NoiseKernel
from toral_relax.relaxation import classify_regime, quantum_lower_bound, tau_classical, tau_quantum
from toral_relax.weyl import QuantumSetting, admissible_angles

CAT = [[2, 1], [1, 1]]
gauss = NoiseKernel()
eps = 0.02

tc = tau_classical(CAT, gauss, eps).tau
print(f"classical relaxation time at eps = {eps}: {tc}\n")
print(f"{'N':>5} {'eps*N':>6} {'regime':>15} {'lower bound':>14} {'tau_quantum':>12}")
for N in (10, 20, 30, 40, 60, 100, 200, 400, 1400):
    lb = quantum_lower_bound(gauss, eps, N)
    if lb > 10**6:
        tq = "(skipped)"
    else:
        tq = tau_quantum(CAT, gauss, eps, QuantumSetting(N, 1, admissible_angles(CAT, N)[0])).tau
    label = classify_regime(CAT, eps, N).label
    lb_text = f"{lb:.3g}" if lb > 10**6 else str(lb)
    print(f"{N:>5} {eps * N:>6.2f} {label:>15} {lb_text:>14} {tq!s:>12}")

# %% a compactly supported kernel makes it starker
bump = NoiseKernel("compact_bump")
N = math.floor(0.5 / eps)
tb = tau_quantum(CAT, bump, eps, QuantumSetting(N, 1, admissible_angles(CAT, N)[0])).tau
print(f"\ncompact bump noise, eps*N = {eps * N}: tau_quantum = {tb} (the noise leaves some nonzero mode untouched)")
