"""
Truncated CI on random integrals: energies along the excitation ladder.

Each level admits more (holes, particles) classes than the one before, so
ground energies can only go down, ending at full CI.
"""

from spinmerism import OrbitalPartition, ci_convergence
from spinmerism.fockspace import SectorSpec
from spinmerism.secondq import random_integral_set

part = OrbitalPartition.from_sizes(2, 2, 2)
report = ci_convergence(random_integral_set(6, seed=11), part, SectorSpec(6, 3, 3))
print("level   dim   E0 (hartree)      E(T) - E(S) (cm-1)")
for r in report.rows:
    print(f"{r.level.value:6s} {r.dimension:4d}  {r.ground_energy:15.10f}   {r.singlet_triplet_cm1:12.2f}")
print("variational:", report.is_variational())
