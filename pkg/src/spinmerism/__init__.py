"""
Exact diagonalization of small many-electron models with local-spin analysis.

Hamiltonians and spin operators are assembled from one- and two-electron
integrals over determinant bases with fixed particle number and Sz.
Eigenstates are then split into joint weights of fragment spins, which
shows how much of each local spin state a total-spin eigenstate holds.
"""

__version__ = "0.1.0"

from .errors import (ConfigError, ConvergenceError, FcidumpError, IntegrityError,
                     ParameterError, ProjectorError, SpinLabelError, SpinmerismError,
                     TrackingError)
from .fockspace import Determinant, SectorBasis, SectorSpec, build_sector_basis
from .secondq import (Fragment, IntegralSet, build_hamiltonian, build_local_s2,
                      build_spin_dot, build_total_s2)
from .eigensolve import Spectrum, assign_spin, diagonalize
from .spinproj import build_projectors, joint_decompose, projection_table
from .cispace import CILevel, OrbitalPartition, generate
from .ligandfield import RacahParameters, d_shell_integrals, tanabe_sugano
from .models import (SpinmerismParams, build_heisenberg_dimer, build_hubbard_dimer,
                     build_spinmerism, fit_heisenberg, solve_spinmerism, sweep_spinmerism)
from .analysis import ci_convergence, detect_avoided_crossing
from .fileio import read_fcidump, write_fcidump

__all__ = [
    "__version__",
    "SpinmerismError", "ParameterError", "ConvergenceError", "SpinLabelError",
    "ProjectorError", "TrackingError", "FcidumpError", "IntegrityError", "ConfigError",
    "Determinant", "SectorSpec", "SectorBasis", "build_sector_basis",
    "Fragment", "IntegralSet", "build_hamiltonian", "build_local_s2", "build_total_s2",
    "build_spin_dot", "Spectrum", "diagonalize", "assign_spin",
    "build_projectors", "joint_decompose", "projection_table",
    "CILevel", "OrbitalPartition", "generate",
    "RacahParameters", "d_shell_integrals", "tanabe_sugano",
    "SpinmerismParams", "build_spinmerism", "solve_spinmerism", "sweep_spinmerism",
    "build_heisenberg_dimer", "build_hubbard_dimer", "fit_heisenberg",
    "ci_convergence", "detect_avoided_crossing", "read_fcidump", "write_fcidump",
]
