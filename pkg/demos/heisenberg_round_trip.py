"""
Recover an exchange constant from an exact two-electron spectrum.

Two orbitals with direct exchange J and a very large on-site repulsion
behave as two coupled spins, so the singlet-triplet gap is 2J and
fitting the Lande rule gives J back.
"""

from spinmerism import SectorSpec, build_sector_basis, build_hamiltonian, build_total_s2
from spinmerism import assign_spin, diagonalize, build_heisenberg_dimer, fit_heisenberg
from spinmerism.units import to_cm1

for J in (60.0, -35.0):
    basis = build_sector_basis(SectorSpec(2, 1, 1))
    spectrum = assign_spin(diagonalize(build_hamiltonian(basis, build_heisenberg_dimer(J))),
                           build_total_s2(basis))
    e = to_cm1(spectrum.eigenvalues - spectrum.eigenvalues[0])
    print(f"J = {J:+.1f} cm-1 ({'ferro' if J > 0 else 'antiferro'}magnetic)")
    for energy, mult in zip(e[:2], spectrum.multiplicities[:2]):
        print(f"   2S+1 = {mult}   {energy:10.4f} cm-1")
    print(f"   fitted J = {fit_heisenberg(spectrum, max_energy_cm1=1e4).J:+.9f} cm-1\n")
