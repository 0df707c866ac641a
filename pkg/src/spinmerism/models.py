"""
Model Hamiltonians: a d6 ion between two radical ligands, plus two-site
benchmarks with closed-form spectra.

The metal-ligand model has seven orbitals: the five real d orbitals
(0-4, ordered as in :data:`spinmerism.ligandfield.D_ORBITALS`) and one
singly occupied orbital on each ligand (5 and 6). Each ligand orbital is
sigma-bonded to one e_g orbital, 5 with dz2 and 6 with dx2-y2.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .eigensolve import DEGENERACY_TOL, Spectrum, assign_spin, diagonalize
from .errors import ParameterError, TrackingError
from .fockspace import SectorSpec, build_sector_basis, parity_block
from .ligandfield import FE2_DEFAULT, RacahParameters, d_coulomb_integrals, crystal_field_oh
from .secondq import Fragment, IntegralSet, build_hamiltonian, build_total_s2, symmetrize_eri
from .spinproj import build_projectors, level_weights
from .units import to_cm1, to_hartree

__all__ = [
    "METAL",
    "LIGANDS",
    "SIGMA_PAIRS",
    "NOMINAL_METAL_COUNT",
    "SPINMERISM_SECTOR",
    "HEISENBERG_U",
    "SpinmerismParams",
    "build_spinmerism",
    "REFLECTIONS",
    "BLOCKS",
    "block_basis",
    "QuintetProbe",
    "SweepPoint",
    "SweepResult",
    "sweep_spinmerism",
    "solve_spinmerism",
    "build_heisenberg_dimer",
    "HeisenbergFit",
    "fit_heisenberg",
    "build_hubbard_dimer",
    "hubbard_dimer_energies",
]

METAL = Fragment((0, 1, 2, 3, 4), "Fe")
LIGANDS = Fragment((5, 6), "L")
SIGMA_PAIRS = ((0, 5), (1, 6))
NOMINAL_METAL_COUNT = 6
SPINMERISM_SECTOR = SectorSpec(7, 4, 4)
HEISENBERG_U = 1.0e6   # cm^-1, keeps ionic states out of the covalent window

SWEEPABLE = ("Dq", "K_ML", "t_ML", "eps_L")


@dataclass(frozen=True)
class SpinmerismParams:
    """
    Parameters of the metal + two-radical model, all in cm^-1.

    ``exchange`` selects where the metal-ligand exchange ``K_ML`` acts:
    ``"sigma"`` couples each ligand orbital to its sigma partner only,
    ``"uniform"`` couples it to all five d orbitals. Uniform exchange
    reduces to a ``S_Fe . s_L`` form and therefore cannot mix metal spin
    states on its own.
    """

    rp: RacahParameters = FE2_DEFAULT
    Dq: float = 2350.0
    eps_L: float = 8000.0
    U_L: float = 60000.0
    t_ML: float = 1000.0
    K_ML: float = 500.0
    K_LL: float = 60.0
    exchange: str = "sigma"

    def __post_init__(self):
        for name in ("Dq", "eps_L", "U_L", "t_ML", "K_ML", "K_LL"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"{name} must be finite")
        if self.U_L < 0:
            raise ParameterError("U_L must be non-negative")
        if self.exchange not in ("sigma", "uniform"):
            raise ParameterError(f"exchange must be 'sigma' or 'uniform', got {self.exchange!r}")
        if not isinstance(self.rp, RacahParameters):
            raise ParameterError("rp must be RacahParameters")

    def with_value(self, name: str, value: float) -> "SpinmerismParams":
        return replace(self, **{name: float(value)})

    def as_dict(self) -> dict:
        d = asdict(self)
        d["rp"] = dict(A=self.rp.A, B=self.rp.B, C=self.rp.C)
        return d


def _put_exchange(g: np.ndarray, p: int, q: int, k: float):
    # (pq|qp) and its permutational partners
    g[p, q, q, p] = g[q, p, p, q] = g[p, q, p, q] = g[q, p, q, p] = k


def build_spinmerism(params: SpinmerismParams) -> IntegralSet:
    """Seven-orbital integrals of the metal + two-radical model (hartree)."""
    d = d_coulomb_integrals(params.rp)
    h = np.zeros((7, 7))
    h[:5, :5] = crystal_field_oh(params.Dq)
    eps = to_hartree(params.eps_L - 4.0 * params.Dq)   # eps_L is measured from t_2g
    h[5, 5] = h[6, 6] = eps
    for m, lig in SIGMA_PAIRS:
        h[m, lig] = h[lig, m] = -to_hartree(params.t_ML)
    g = np.zeros((7,) * 4)
    g[:5, :5, :5, :5] = d.g
    g[5, 5, 5, 5] = g[6, 6, 6, 6] = to_hartree(params.U_L)
    k_ml = to_hartree(params.K_ML)
    if params.exchange == "sigma":
        pairs = SIGMA_PAIRS
    else:
        pairs = tuple((m, lig) for m in range(5) for lig in (5, 6))
    for m, lig in pairs:
        _put_exchange(g, m, lig, k_ml)
    _put_exchange(g, 5, 6, to_hartree(params.K_LL))
    return IntegralSet(7, 0.0, h, symmetrize_eri(g))


def solve_spinmerism(params: SpinmerismParams, sector: SectorSpec = SPINMERISM_SECTOR,
                     degeneracy_tol: float = DEGENERACY_TOL):
    """Diagonalize the model and label spins; returns ``(basis, spectrum)``."""
    basis = build_sector_basis(sector)
    h = build_hamiltonian(basis, build_spinmerism(params))
    spectrum = assign_spin(diagonalize(h), build_total_s2(basis), sz=sector.sz,
                           degeneracy_tol=degeneracy_tol)
    return basis, spectrum


# ---------------------------------------------------------------------------
# sweeps
#
# The sigma model keeps the reflections x -> -x and y -> -y, under which
# dxy, dxz (x) and dxy, dyz (y) change sign. Each orbitally degenerate
# level contributes one component to several reflection blocks, and only
# states of the same block can repel, so quintet curves are followed
# inside a single block.

REFLECTIONS = ((2, 3), (2, 4))
BLOCKS = {"a": (0, 0), "xz": (1, 0), "yz": (0, 1), "xy": (1, 1)}
SWEEP_BLOCK = "xz"


def block_basis(block: str = SWEEP_BLOCK, sector: SectorSpec = SPINMERISM_SECTOR):
    """Determinants of one reflection block of the model sector."""
    if block not in BLOCKS:
        raise ParameterError(f"unknown block {block!r}; choose from {sorted(BLOCKS)}")
    return parity_block(build_sector_basis(sector), REFLECTIONS, BLOCKS[block])


@dataclass
class SweepPoint:
    value: float
    ground_cm1: float                 # absolute ground energy of the full sector
    energies: tuple                   # two lowest quintets, cm^-1 above ground
    weights: tuple                    # per quintet: {(S_Fe, S_L): w}
    ct_weights: tuple
    septet_weight: float              # min over septets of w(S_Fe=2, S_L=1)

    def fe_weight(self, k: int, s_fe: float) -> float:
        return float(sum(w for (a, _), w in self.weights[k].items() if a == s_fe))


@dataclass
class SweepResult:
    vary: str
    params: SpinmerismParams
    block: str
    points: list = field(default_factory=list)
    min_gap_cm1: float = float("nan")
    min_gap_at: float = float("nan")
    crossing: Optional[object] = None     # analysis.CrossingReport

    @property
    def values(self) -> np.ndarray:
        return np.array([p.value for p in self.points])

    def curve(self, k: int) -> np.ndarray:
        return np.array([p.energies[k] for p in self.points])

    def gaps(self) -> np.ndarray:
        return self.curve(1) - self.curve(0)

    def fe_weights(self, k: int, s_fe: float) -> np.ndarray:
        return np.array([p.fe_weight(k, s_fe) for p in self.points])


class QuintetProbe:
    """
    Solves the model in one reflection block and reports the two lowest
    quintets. Projectors and bases are built once and reused.
    """

    def __init__(self, params: SpinmerismParams, vary: str, block: str = SWEEP_BLOCK,
                 degeneracy_tol: float = DEGENERACY_TOL):
        if vary not in SWEEPABLE:
            raise ParameterError(f"cannot sweep {vary!r}; choose from {SWEEPABLE}")
        self.params, self.vary, self.block = params, vary, block
        self.degeneracy_tol = degeneracy_tol
        self.full = build_sector_basis(SPINMERISM_SECTOR)
        self.basis = block_basis(block)
        self.s2 = build_total_s2(self.basis)
        self.proj_fe = build_projectors(self.basis, METAL)
        self.proj_l = build_projectors(self.basis, LIGANDS)
        self.occ = self.basis.occupations(METAL.orbitals)

    def solve(self, value: float):
        ints = build_spinmerism(self.params.with_value(self.vary, value))
        spec = assign_spin(diagonalize(build_hamiltonian(self.basis, ints)), self.s2,
                           sz=SPINMERISM_SECTOR.sz, degeneracy_tol=self.degeneracy_tol)
        q = np.nonzero(spec.multiplicities == 5)[0]
        if q.size < 2:
            raise TrackingError(f"fewer than two S_total = 2 states at {self.vary} = {value}")
        return ints, spec, q[:2]

    def gap(self, value: float) -> float:
        _, spec, q = self.solve(value)
        return float(to_cm1(spec.eigenvalues[q[1]] - spec.eigenvalues[q[0]]))

    def point(self, value: float) -> SweepPoint:
        ints, spec, q = self.solve(value)
        h_full = build_hamiltonian(self.full, ints)
        e0 = min(diagonalize(h_full, k=1, dense_max=0).eigenvalues[0], spec.eigenvalues[0])
        weights, cts = [], []
        for i in q:
            v = spec.eigenvectors[:, [i]]
            weights.append(level_weights(v, self.proj_fe, self.proj_l))
            cts.append(float((v[:, 0] ** 2)[self.occ != NOMINAL_METAL_COUNT].sum()))
        sept = np.nonzero(spec.multiplicities == 7)[0]
        sw = min((level_weights(spec.eigenvectors[:, [i]], self.proj_fe, self.proj_l)
                  .get((2.0, 1.0), 0.0) for i in sept), default=float("nan"))
        return SweepPoint(float(value), float(to_cm1(e0)),
                          tuple(float(to_cm1(spec.eigenvalues[i] - e0)) for i in q),
                          tuple(weights), tuple(cts), float(sw))


def sweep_spinmerism(params: SpinmerismParams, vary: str, values: Sequence[float],
                     block: str = SWEEP_BLOCK, degeneracy_tol: float = DEGENERACY_TOL,
                     executor=None, detect: bool = True) -> SweepResult:
    """
    Follow the two lowest quintets while one parameter is varied.

    Each point is solved in one reflection block of the Sz = 0 sector;
    both quintets are decomposed into joint (S_Fe, S_L) weights. The result
    holds the smallest grid gap and, if ``detect`` is set, a refined
    crossing analysis from :func:`spinmerism.analysis.sweep_crossing`.
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ParameterError("empty sweep range")
    if np.any(np.diff(values) <= 0):
        raise ParameterError("sweep values must be strictly increasing")
    probe = QuintetProbe(params, vary, block, degeneracy_tol)
    pts = list(executor.map(probe.point, values)) if executor else [probe.point(v) for v in values]
    res = SweepResult(vary, params, block, pts)
    gaps = res.gaps()
    k = int(np.argmin(gaps))
    res.min_gap_cm1, res.min_gap_at = float(gaps[k]), float(values[k])
    if detect:
        from .analysis import sweep_crossing
        res.crossing = sweep_crossing(res, probe)
    return res


# ---------------------------------------------------------------------------
# two-site models

def build_heisenberg_dimer(J: float, U: float = HEISENBERG_U) -> IntegralSet:
    """
    Two orbitals whose two-electron covalent states follow H = -2J s1.s2.

    The only integrals are the direct exchange K = (12|21) = J and a large
    on-site repulsion ``U`` that lifts the ionic states; there is no
    hopping, so the singlet-triplet gap is exactly 2J.
    """
    if not np.isfinite(J):
        raise ParameterError("J must be finite")
    g = np.zeros((2,) * 4)
    g[0, 0, 0, 0] = g[1, 1, 1, 1] = to_hartree(U)
    _put_exchange(g, 0, 1, to_hartree(J))
    return IntegralSet(2, 0.0, None, g)


@dataclass(frozen=True)
class HeisenbergFit:
    """Exchange constant for H = -2J S1.S2 (cm^-1); J > 0 is ferromagnetic."""

    J: float
    residual: float
    levels: tuple = ()        # (S, energy_cm1) pairs used in the fit


def fit_heisenberg(spectrum: Spectrum, max_energy_cm1: Optional[float] = None) -> HeisenbergFit:
    """
    Fit the Lande interval rule E(S) = E0 - J S(S+1) to the lowest level of
    each total spin present.

    With exactly two spin values the rule is solved exactly; for a singlet
    and a triplet it gives J = (E_S - E_T) / 2.
    ``max_energy_cm1`` drops levels above that energy (relative to the
    ground state), e.g. ionic states.
    """
    if spectrum.spins is None:
        raise ParameterError("fit_heisenberg needs a spin-labeled spectrum")
    e = to_cm1(spectrum.eigenvalues - spectrum.eigenvalues[0])
    levels = {}
    for ei, s in zip(e, spectrum.spins):
        if max_energy_cm1 is not None and ei > max_energy_cm1:
            continue
        levels.setdefault(float(s), float(ei))
    if len(levels) < 2:
        raise ParameterError("need levels of at least two total spins to fit J")
    s = np.array(sorted(levels))
    y = np.array([levels[x] for x in s])
    x = s * (s + 1)
    if len(s) == 2:
        J = -(y[1] - y[0]) / (x[1] - x[0])
        return HeisenbergFit(float(J), 0.0, tuple(zip(s.tolist(), y.tolist())))
    A = np.column_stack([np.ones_like(x), -x])
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.abs(A @ coef - y).max())
    J = coef[1]
    return HeisenbergFit(float(J), resid, tuple(zip(s.tolist(), y.tolist())))


def build_hubbard_dimer(U: float, t: float) -> IntegralSet:
    """Two-site Hubbard model (hartree): hopping -t, on-site repulsion U."""
    h = np.array([[0.0, -t], [-t, 0.0]])
    g = np.zeros((2,) * 4)
    g[0, 0, 0, 0] = g[1, 1, 1, 1] = U
    return IntegralSet(2, 0.0, h, g)


def hubbard_dimer_energies(U: float, t: float) -> np.ndarray:
    """Analytic two-electron spectrum of the Hubbard dimer, ascending."""
    r = np.sqrt(U * U + 16 * t * t)
    return np.sort([(U - r) / 2, 0.0, U, (U + r) / 2])
