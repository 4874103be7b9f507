"""Shortest lattice vectors under repeated application of the cat map.

Run:  python3 demos/04_orbit_extension.py

min over nonzero integer k of sum_j |F^j k|^2 (j = 0..n) grows like
exp(2 h n).  The log ratio column tends to 1.
"""

import math

from toral_relax.lattice import ks_entropy, min_orbit_extension

CAT = [[2, 1], [1, 1]]
h = ks_entropy(CAT).min_averaged

print(f"{'n':>3} {'minimum':>22} {'argmin':>16} {'log ratio':>10}")
for n in (1, 2, 4, 8, 12, 16, 24, 32, 40):
    ext = min_orbit_extension(CAT, n, variant="sum")
    ratio = math.log(ext.value) / (2 * h * n)
    print(f"{n:>3} {ext.value:>22} {str(ext.argmin):>16} {ratio:>10.4f}")
