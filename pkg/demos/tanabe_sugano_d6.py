"""
Ligand-field term diagram of a d6 ion.

Sweeps the octahedral splitting at fixed Racah parameters and reports the
ground multiplicity along the sweep, the spin crossover from the
high-spin quintet to the low-spin singlet, and where the lowest excited
triplet and quintet cross.
"""

import numpy as np

from spinmerism.ligandfield import FE2_DEFAULT, tanabe_sugano

ts = tanabe_sugano(6, FE2_DEFAULT, np.linspace(0.0, 4.0, 41))
print(f"B = {FE2_DEFAULT.B} cm-1, C/B = {FE2_DEFAULT.C / FE2_DEFAULT.B}")
print("Dq/B   ground 2S+1   lowest excited triplet / quintet (E/B)")
trip = ts.lowest(3, exclude_ground=True)
quin = ts.lowest(5, exclude_ground=True)
def show(e):
    return f"{e:7.2f}" if np.isfinite(e) else "   none"


for x, g, t, q in list(zip(ts.dq_over_b, ts.ground_multiplicity(), trip, quin))[::4]:
    print(f"{x:4.1f}   {g:6d}        {show(t)} / {show(q)}")
print()
for c in ts.crossings:
    print(f"{c.kind:15s} at Dq/B = {c.dq_over_b:.4f}  between 2S+1 = {c.labels}")
