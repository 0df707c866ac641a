"""
Local spin content of the low-lying states of the metal + two-radical model.

Each eigenstate of the seven-orbital model is split into joint weights of
metal spin and ligand spin; weight on configurations with a metal electron
count other than six is charge transfer.
"""

from spinmerism import build_projectors, projection_table, solve_spinmerism, SpinmerismParams
from spinmerism.models import LIGANDS, METAL, NOMINAL_METAL_COUNT
from spinmerism.spinproj import format_spin

basis, spectrum = solve_spinmerism(SpinmerismParams())
table = projection_table(spectrum, build_projectors(basis, METAL), build_projectors(basis, LIGANDS),
                         nominal=NOMINAL_METAL_COUNT, names=("Fe", "L"))
print("  E (cm-1)  2S+1   leading (S_Fe, S_L) weights            CT")
seen = 0
for row in table.rows:
    if seen >= 25:
        break
    seen += 1
    lead = sorted(row.weights.items(), key=lambda kv: -kv[1])[:2]
    text = "  ".join(f"({format_spin(a)},{format_spin(b)}) {w:5.3f}" for (a, b), w in lead)
    print(f"{row.energy_cm1:10.1f}  {row.multiplicity:4d}   {text:36s}  {row.ct_weight:.1e}")
