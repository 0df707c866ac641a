"""
Local-spin projectors and joint (S_A, S_B) decomposition of eigenstates.

A fragment's ``S^2`` is diagonalized in the many-electron basis and its
eigenvectors are grouped by local spin s, giving projectors ``P_s``. For
disjoint fragments A and B the projectors commute, so

    w(S_A, S_B) = || P_{S_A} P_{S_B} psi ||^2

sums to one over all pairs. Each weight is further split by the electron
count on fragment A; counts that differ from the nominal one are reported
as charge-transfer weight.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Dict, Optional, Tuple

import numpy as np

from .eigensolve import DENSE_MAX, Spectrum, _dense_eigh
from .errors import ParameterError, ProjectorError
from .fockspace import SectorBasis
from .secondq import Fragment, _as_fragment, build_local_s2
from .units import to_cm1

__all__ = [
    "ZERO_WEIGHT",
    "SpinProjectorSet",
    "ProjectionRow",
    "ProjectionTable",
    "build_projectors",
    "joint_decompose",
    "projection_table",
    "level_weights",
    "coupled_state_oracle",
    "coupled_weights_oracle",
    "format_spin",
]

ZERO_WEIGHT = 1e-12
GROUP_TOL = 1e-8
LABEL_TOL = 1e-6


def format_spin(s: float) -> str:
    """``2 -> '2'``, ``1.5 -> '3/2'``."""
    twice = int(round(2 * s))
    return str(twice // 2) if twice % 2 == 0 else f"{twice}/2"


def _spin_value(lam: float) -> float:
    s = 0.5 * (np.sqrt(1.0 + 4.0 * max(lam, 0.0)) - 1.0)
    s = np.rint(2 * s) / 2
    if abs(lam - s * (s + 1)) > LABEL_TOL:
        raise ProjectorError(f"local S^2 eigenvalue {lam:.10f} is not s(s+1)")
    return float(s)


class _LowdinProjector:
    """``prod_{t != s} (S^2 - t(t+1)) / (s(s+1) - t(t+1))`` applied lazily."""

    def __init__(self, s2, s, candidates):
        self.s2 = s2
        self.lam = s * (s + 1)
        self.others = [t * (t + 1) for t in candidates if t != s]

    def __matmul__(self, v):
        out = np.array(v, dtype=float, copy=True)
        for mu in self.others:
            out = (self.s2 @ out - mu * out) / (self.lam - mu)
        return out


@dataclass(frozen=True)
class SpinProjectorSet:
    """
    Projectors onto the local-spin eigenspaces of one fragment.

    ``sectors`` is a tuple of ``(s, P_s)``. ``P_s`` is a dense array below
    the dense threshold and a lazily applied polynomial in ``S^2`` above.
    """

    fragment: Fragment
    sectors: tuple
    occupations: np.ndarray = field(repr=False)
    bases: dict = field(default_factory=dict, repr=False)

    @property
    def values(self) -> tuple:
        return tuple(s for s, _ in self.sectors)

    def projector(self, s: float):
        for t, p in self.sectors:
            if abs(t - s) < 1e-9:
                return p
        raise KeyError(s)

    def apply(self, s: float, vecs: np.ndarray) -> np.ndarray:
        """``P_s @ vecs`` using the cheapest stored form."""
        v = self.bases.get(s)
        if v is not None:
            return v @ (v.T @ vecs)
        return self.projector(s) @ vecs


def build_projectors(basis: SectorBasis, frag, dense_max: int = DENSE_MAX) -> SpinProjectorSet:
    """Eigendecompose the fragment ``S^2`` and group eigenvectors by local spin."""
    frag = _as_fragment(frag, basis.norb)
    s2 = build_local_s2(basis, frag)
    occ = basis.occupations(frag.orbitals)
    if len(basis) > dense_max:
        candidates = [k / 2 for k in range(len(frag) + 1)]
        sectors = tuple((s, _LowdinProjector(s2, s, candidates)) for s in candidates)
        return SpinProjectorSet(frag, sectors, occ)
    vals, vecs = _dense_eigh(s2, len(basis))
    spins = np.array([_spin_value(x) for x in vals])
    sectors, bases = [], {}
    for s in sorted(set(spins.tolist())):
        idx = np.nonzero(spins == s)[0]
        if np.ptp(vals[idx]) > GROUP_TOL * max(1.0, s * (s + 1)):
            raise ProjectorError(f"eigenvalues assigned to s={s} spread by {np.ptp(vals[idx]):.2e}")
        v = vecs[:, idx]
        bases[s] = v
        sectors.append((s, v @ v.T))
    return SpinProjectorSet(frag, tuple(sectors), occ, bases)


@dataclass
class ProjectionRow:
    """Local-spin decomposition of one state."""

    energy_cm1: float
    multiplicity: Optional[int]
    weights: Dict[Tuple[float, float], float]
    ct_weight: Optional[float]
    weights_by_count: Dict[Tuple[int, float, float], float]

    def weight(self, s_a: float, s_b: float) -> float:
        return self.weights.get((s_a, s_b), 0.0)

    def total(self) -> float:
        return float(sum(self.weights.values()))

    def fragment_weight(self, s_a: Optional[float] = None, s_b: Optional[float] = None) -> float:
        """Marginal weight on one fragment's spin."""
        return float(sum(w for (a, b), w in self.weights.items()
                         if (s_a is None or a == s_a) and (s_b is None or b == s_b)))


@dataclass
class ProjectionTable:
    rows: list
    names: Tuple[str, str] = ("A", "B")
    nominal: Optional[int] = None

    def pairs(self) -> list:
        keys = set()
        for r in self.rows:
            keys.update(r.weights)
        return sorted(keys)

    def columns(self) -> list:
        a, b = self.names
        cols = ["energy_cm1", "multiplicity"]
        cols += [f"w_{a}{format_spin(sa)}_{b}{format_spin(sb)}" for sa, sb in self.pairs()]
        return cols + ["ct_weight"]

    def records(self) -> list:
        """One list of values per row, matching :meth:`columns`."""
        out = []
        pairs = self.pairs()
        for r in self.rows:
            vals = [r.energy_cm1, r.multiplicity]
            vals += [_clip(r.weight(*p)) for p in pairs]
            vals.append(None if r.ct_weight is None else _clip(r.ct_weight))
            out.append(vals)
        return out


def _clip(w: float) -> float:
    return 0.0 if abs(w) < ZERO_WEIGHT else float(w)


def _decompose(vecs: np.ndarray, set_a: SpinProjectorSet, set_b: SpinProjectorSet,
               nominal: Optional[int]):
    counts = np.unique(set_a.occupations)
    out = []
    per_b = {sb: set_b.apply(sb, vecs) for sb in set_b.values}
    weights = {}
    by_count = {}
    for sa in set_a.values:
        for sb, vb in per_b.items():
            phi = set_a.apply(sa, vb)
            dens = phi * phi
            for n in counts:
                by_count[(int(n), sa, sb)] = dens[set_a.occupations == n].sum(axis=0)
            weights[(sa, sb)] = dens.sum(axis=0)
    for k in range(vecs.shape[1]):
        w = {key: float(v[k]) for key, v in weights.items()}
        bc = {key: float(v[k]) for key, v in by_count.items()}
        ct = None
        if nominal is not None:
            ct = float(sum(v for (n, _, _), v in bc.items() if n != nominal))
        out.append((w, bc, ct))
    return out


def _check_disjoint(set_a, set_b):
    if set(set_a.fragment.orbitals) & set(set_b.fragment.orbitals):
        raise ParameterError("fragments must be disjoint")


def joint_decompose(state: np.ndarray, set_a: SpinProjectorSet, set_b: SpinProjectorSet,
                    nominal: Optional[int] = None, energy_cm1: float = 0.0,
                    multiplicity: Optional[int] = None) -> ProjectionRow:
    """Joint local-spin weights of one normalized state."""
    _check_disjoint(set_a, set_b)
    state = np.asarray(state, dtype=float)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-8:
        raise ParameterError(f"state is not normalized (norm {norm:.10f})")
    ((w, bc, ct),) = _decompose(state[:, None], set_a, set_b, nominal)
    return ProjectionRow(energy_cm1, multiplicity, w, ct, bc)


def projection_table(spectrum: Spectrum, set_a: SpinProjectorSet, set_b: SpinProjectorSet,
                     nominal: Optional[int] = None, names=("A", "B"),
                     reference: Optional[float] = None) -> ProjectionTable:
    """Decompose every eigenvector; energies in cm^-1 above ``reference``."""
    _check_disjoint(set_a, set_b)
    ref = spectrum.eigenvalues[0] if reference is None else reference
    mults = spectrum.multiplicities if spectrum.spins is not None else [None] * len(spectrum)
    rows = []
    for k, (w, bc, ct) in enumerate(_decompose(spectrum.eigenvectors, set_a, set_b, nominal)):
        e = to_cm1(spectrum.eigenvalues[k] - ref)
        rows.append(ProjectionRow(float(e), None if mults[k] is None else int(mults[k]), w, ct, bc))
    return ProjectionTable(rows, tuple(names), nominal)


def level_weights(vecs: np.ndarray, set_a: SpinProjectorSet, set_b: SpinProjectorSet,
                  nominal: Optional[int] = None) -> dict:
    """
    Weights of a degenerate level: the average over an orthonormal basis of
    its subspace, which does not depend on the basis chosen.
    """
    rows = _decompose(np.atleast_2d(vecs.T).T, set_a, set_b, nominal)
    n = len(rows)
    w = {}
    for rw, _, _ in rows:
        for key, v in rw.items():
            w[key] = w.get(key, 0.0) + v / n
    return w


# ---------------------------------------------------------------------------
# Clebsch-Gordan oracle in exact rational arithmetic.
#
# States are stored in the unnormalized ladder basis |j m>' = (J-)^(j-m) |j j>
# so every lowering step has coefficient 1 and every inner product is
# rational: <j m|j m>' = prod_{k=m+1}^{j} (j + k)(j - k + 1).

def _half(x) -> Fraction:
    f = Fraction(x).limit_denominator(2)
    if f.denominator not in (1, 2) or f != Fraction(x).limit_denominator(1000):
        raise ParameterError(f"{x} is not a half-integer")
    return f


def _ladder_norm(j: Fraction, m: Fraction) -> Fraction:
    out = Fraction(1)
    k = m + 1
    while k <= j:
        out *= (j + k) * (j - k + 1)
        k += 1
    return out


def _lower(state: dict, ja: Fraction, jb: Fraction) -> dict:
    out = {}
    for (ma, mb), c in state.items():
        if ma - 1 >= -ja:
            out[(ma - 1, mb)] = out.get((ma - 1, mb), 0) + c
        if mb - 1 >= -jb:
            out[(ma, mb - 1)] = out.get((ma, mb - 1), 0) + c
    return {k: v for k, v in out.items() if v != 0}


def _inner(u: dict, v: dict, ja, jb) -> Fraction:
    return sum((c * v[k] * _ladder_norm(ja, k[0]) * _ladder_norm(jb, k[1])
                for k, c in u.items() if k in v), Fraction(0))


def coupled_state_oracle(s_a, s_b, s_total, m=None) -> dict:
    """
    ``|S_A S_B; S M>`` as ``{(m_A, m_B): sign * CG^2}`` with exact Fractions.

    Built by lowering the stretched state and orthogonalizing each new
    highest-weight state against the lowered higher multiplets (Condon and
    Shortley phase: the ``m_A = S_A`` component of ``|S S>`` is positive).
    """
    ja, jb, j = _half(s_a), _half(s_b), _half(s_total)
    mm = j if m is None else _half(m)
    if ja < 0 or jb < 0 or not abs(ja - jb) <= j <= ja + jb or (ja + jb - j).denominator != 1:
        raise ParameterError(f"triangle rule violated for ({s_a}, {s_b}, {s_total})")
    if abs(mm) > j or (j - mm).denominator != 1:
        raise ParameterError(f"M={m} not allowed for S={s_total}")

    jmax = ja + jb
    tops = {jmax: {(ja, jb): Fraction(1)}}
    cur = jmax
    while cur > j:
        nxt = cur - 1
        lowered = []
        for jj, top in tops.items():
            v = top
            for _ in range(int(jj - nxt)):
                v = _lower(v, ja, jb)
            lowered.append(v)
        found = None
        ma = ja
        while found is None and ma >= -ja:
            mb = nxt - ma
            if abs(mb) <= jb and (jb - mb).denominator == 1:
                v = {(ma, mb): Fraction(1)}
                for u in lowered:
                    coef = _inner(u, v, ja, jb) / _inner(u, u, ja, jb)
                    for key, c in u.items():
                        v[key] = v.get(key, 0) - coef * c
                v = {k: c for k, c in v.items() if c != 0}
                if v:
                    found = v
            ma -= 1
        lead = found.get((ja, nxt - ja), Fraction(0))
        if lead < 0:
            found = {k: -c for k, c in found.items()}
        tops[nxt] = found
        cur = nxt
    state = tops[j]
    for _ in range(int(j - mm)):
        state = _lower(state, ja, jb)
    norm = _inner(state, state, ja, jb)
    return {k: (1 if c > 0 else -1) * c * c * _ladder_norm(ja, k[0]) * _ladder_norm(jb, k[1]) / norm
            for k, c in sorted(state.items(), reverse=True)}


def coupled_weights_oracle(s_a, s_b, s_total, m=None) -> dict:
    """Squared Clebsch-Gordan weights ``{(m_A, m_B): Fraction}`` of ``|S M>``."""
    return {k: abs(v) for k, v in coupled_state_oracle(s_a, s_b, s_total, m).items()}
