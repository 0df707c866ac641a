"""Energy units. Everything is hartree internally; reports use cm^-1."""

CM1_PER_HARTREE = 219474.6313632


def to_cm1(energy_hartree):
    return energy_hartree * CM1_PER_HARTREE


def to_hartree(energy_cm1):
    return energy_cm1 / CM1_PER_HARTREE
