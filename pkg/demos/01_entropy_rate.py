"""How fast does the noisy cat map forget its initial state?

Run:  python3 demos/01_entropy_rate.py

The relaxation time grows like ln(1/eps) divided by the entropy.  We check
that on the classical torus and on quantum tori of size N ~ 28/eps.
"""

import math

import numpy as np

from toral_relax.lattice import ks_entropy
from toral_relax.noise import NoiseKernel
from toral_relax.relaxation import tau_classical, tau_quantum, theorem_constant_M
from toral_relax.weyl import QuantumSetting, admissible_angles

CAT = [[2, 1], [1, 1]]
gauss = NoiseKernel()

# %% entropy and the size rule
h = ks_entropy(CAT).min_averaged
M, M_prime = theorem_constant_M(CAT)
print(f"entropy per degree of freedom h = {h:.5f}, so the expected slope is 1/h = {1 / h:.4f}")
print(f"size rule: N = ceil({M_prime}/eps)  (threshold constant {M:.3f})\n")

# %% sweep
grid = [0.1, 0.05, 0.02, 0.01, 0.005, 0.002]
print(f"{'eps':>7} {'N':>6} {'tau_classical':>14} {'tau_quantum':>12}")
tc, tq = [], []
for eps in grid:
    N = math.ceil(M_prime / eps)
    setting = QuantumSetting(N, 1, admissible_angles(CAT, N)[0])
    tc.append(tau_classical(CAT, gauss, eps).tau)
    tq.append(tau_quantum(CAT, gauss, eps, setting).tau)
    print(f"{eps:>7} {N:>6} {tc[-1]:>14} {tq[-1]:>12}")

# %% fitted slopes
x = np.log(1 / np.array(grid))
for name, taus in (("classical", tc), ("quantum", tq)):
    slope = np.polyfit(x, taus, 1)[0]
    print(f"{name:>9}: slope {slope:.3f} against 1/h = {1 / h:.3f}")
print("\nQuantum and classical times agree: at this N the quantum noise acts like the classical one.")
