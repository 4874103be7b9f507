"""Quantum evolution against classical evolution of one observable.

Run:  python3 demos/03_egorov.py

For the linear cat map conjugating Op(cos 2 pi q) by the quantized map is
the same as quantizing the composed function: the discrepancy is zero.  A
small kick breaks this, and the error falls off with N.
"""

from toral_relax.classical import ClassicalMapSpec
from toral_relax.quantum import egorov_discrepancy
from toral_relax.series import FourierSeries
from toral_relax.weyl import QuantumSetting, admissible_angles

CAT = [[2, 1], [1, 1]]
f = FourierSeries.cos_q(1.0)


def setting(N):
    return QuantumSetting(N, 1, admissible_angles(CAT, N)[0])


linear = ClassicalMapSpec(CAT)
print("linear map, n = 3:", [egorov_discrepancy(linear, f, 3, setting(N)) for N in (16, 32, 64)])

kicked = ClassicalMapSpec.kicked(CAT, 0.3)
prev = None
print(f"\n{'N':>5} {'discrepancy':>13} {'ratio':>7}")
for N in (16, 32, 64, 128):
    d = egorov_discrepancy(kicked, f, 3, setting(N))
    print(f"{N:>5} {d:>13.4e} {'' if prev is None else f'{prev / d:7.3f}'}")
    prev = d
print("\nDoubling N divides the error by about four: second order in 1/N.")
