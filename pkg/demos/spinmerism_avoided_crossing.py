"""
Two quintets trading metal spin character.

In the metal + two-radical model the lowest S_total = 2 states come from
either a metal triplet coupled to the ligand triplet or a metal quintet
coupled to it. Sweeping the crystal field moves one past the other. With
no metal-ligand exchange they cross; exchange couples them, the crossing
becomes avoided and each state is an even mixture of the two local metal
spins at closest approach.
"""

import numpy as np

from spinmerism import SpinmerismParams, sweep_spinmerism

dq = np.linspace(2200.0, 2500.0, 31)
for k_ml in (0.0, 500.0):
    res = sweep_spinmerism(SpinmerismParams(t_ML=0.0, K_ML=k_ml), "Dq", dq)
    c = res.crossing
    print(f"K_ML = {k_ml:5.0f} cm-1: {c.kind} at Dq = {c.location:.2f} cm-1, "
          f"gap {c.min_gap:.4f} cm-1")
    print("    Dq      E(Q1)    E(Q2)   w(S_Fe=2) Q1  Q2")
    for p in res.points[::5]:
        print(f"  {p.value:6.0f} {p.energies[0]:8.1f} {p.energies[1]:8.1f}"
              f"      {p.fe_weight(0, 2.0):5.3f}  {p.fe_weight(1, 2.0):5.3f}")
    if c.weights_at:
        mix = [sum(w for (a, _), w in wq.items() if a == 2.0) for wq in c.weights_at]
        print(f"  at closest approach w(S_Fe=2) = {mix[0]:.3f}, {mix[1]:.3f}")
    print()
