"""
d-shell ligand-field spectra and Tanabe-Sugano sweeps.

Electron repulsion among the five d orbitals is built from Racah
parameters through Slater-Condon radial integrals and Gaunt angular
factors (exact 3j symbols), then rotated to real cubic harmonics ordered
``(dz2, dx2-y2, dxy, dxz, dyz)``. Octahedral splitting puts e_g at +6Dq and
t_2g at -4Dq.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from math import factorial
from typing import Sequence

import numpy as np
from scipy.optimize import brentq

from .eigensolve import DEGENERACY_TOL, assign_spin, diagonalize, group_degenerate
from .errors import ParameterError
from .fockspace import SectorSpec, build_sector_basis
from .secondq import IntegralSet, build_hamiltonian, build_total_s2
from .units import to_cm1, to_hartree

__all__ = [
    "D_ORBITALS",
    "EG",
    "T2G",
    "RacahParameters",
    "CrystalField",
    "FE2_DEFAULT",
    "three_j_squared",
    "three_j",
    "gaunt",
    "slater_from_racah",
    "real_d_transform",
    "d_coulomb_integrals",
    "crystal_field_oh",
    "d_shell_integrals",
    "Level",
    "TrackedCurve",
    "Crossing",
    "TSCurve",
    "ts_levels",
    "tanabe_sugano",
    "find_crossings",
]

D_ORBITALS = ("dz2", "dx2-y2", "dxy", "dxz", "dyz")
EG = (0, 1)
T2G = (2, 3, 4)


@dataclass(frozen=True)
class RacahParameters:
    """Racah parameters in cm^-1. A only shifts dn energies uniformly."""

    B: float
    C: float
    A: float = 0.0

    def __post_init__(self):
        for name in ("A", "B", "C"):
            if not np.isfinite(getattr(self, name)):
                raise ParameterError(f"Racah {name} must be finite")
        # B = C = 0 is allowed for the degenerate-limit check; sweeps need B > 0
        if self.B < 0 or self.C < 0:
            raise ParameterError("Racah B and C must be non-negative")


@dataclass(frozen=True)
class CrystalField:
    Dq: float

    def __post_init__(self):
        if not np.isfinite(self.Dq):
            raise ParameterError("Dq must be finite")


FE2_DEFAULT = RacahParameters(B=917.0, C=4.5 * 917.0)


# ---------------------------------------------------------------------------
# angular algebra

def three_j_squared(j1, j2, j3, m1, m2, m3) -> Fraction:
    """Signed square ``sign(3j) * 3j^2`` of a Wigner 3j symbol, exactly."""
    j1, j2, j3, m1, m2, m3 = (Fraction(x) for x in (j1, j2, j3, m1, m2, m3))
    if m1 + m2 + m3 != 0 or not abs(j1 - j2) <= j3 <= j1 + j2:
        return Fraction(0)
    if abs(m1) > j1 or abs(m2) > j2 or abs(m3) > j3:
        return Fraction(0)
    ints = [j1 + j2 - j3, j1 - j2 + j3, -j1 + j2 + j3, j1 + m1, j1 - m1,
            j2 + m2, j2 - m2, j3 + m3, j3 - m3, j1 + j2 + j3 + 1]
    if any(x.denominator != 1 for x in ints):
        return Fraction(0)
    f = [int(x) for x in ints]
    tri = Fraction(factorial(f[0]) * factorial(f[1]) * factorial(f[2]), factorial(f[9]))
    pre = tri * factorial(f[3]) * factorial(f[4]) * factorial(f[5]) * factorial(f[6]) \
        * factorial(f[7]) * factorial(f[8])
    total = 0
    tmin = int(max(0, j2 - j3 - m1, j1 - j3 + m2))
    tmax = int(min(j1 + j2 - j3, j1 - m1, j2 + m2))
    for t in range(tmin, tmax + 1):
        den = (factorial(t) * factorial(int(j3 - j2 + t + m1)) * factorial(int(j3 - j1 + t - m2))
               * factorial(int(j1 + j2 - j3 - t)) * factorial(int(j1 - t - m1))
               * factorial(int(j2 - t + m2)))
        total += Fraction((-1) ** t, den)
    sign = -1 if int(j1 - j2 - m3) % 2 else 1
    value = sign * total
    return (1 if value > 0 else -1) * value * value * pre if value else Fraction(0)


def three_j(j1, j2, j3, m1, m2, m3) -> float:
    v = three_j_squared(j1, j2, j3, m1, m2, m3)
    return float(np.sign(v) * np.sqrt(float(abs(v))))


@lru_cache(maxsize=None)
def gaunt(k: int, l1: int, m1: int, l2: int, m2: int) -> float:
    """
    Condon-Shortley angular coefficient c^k(l1 m1; l2 m2), i.e.
    ``sqrt(4 pi / (2k + 1)) * integral Y*_{l1 m1} Y_{k, m1-m2} Y_{l2 m2}``.
    """
    pre = (-1) ** m1 * np.sqrt((2 * l1 + 1) * (2 * l2 + 1))
    return pre * three_j(l1, k, l2, 0, 0, 0) * three_j(l1, k, l2, -m1, m1 - m2, m2)


def slater_from_racah(rp: RacahParameters):
    """Slater-Condon integrals ``(F0, F2, F4)`` (not the reduced F_k), cm^-1."""
    f4_reduced = rp.C / 35.0
    f2_reduced = rp.B + 5.0 * f4_reduced
    f0 = rp.A + 49.0 * f4_reduced
    return f0, 49.0 * f2_reduced, 441.0 * f4_reduced


def real_d_transform() -> np.ndarray:
    """Unitary ``U[i, m]`` with real orbital i = sum_m U[i, m] Y_{2m}, m = -2..2."""
    s = 1 / np.sqrt(2)
    u = np.zeros((5, 5), dtype=complex)
    col = {m: m + 2 for m in range(-2, 3)}
    u[0, col[0]] = 1.0                                  # dz2
    u[1, col[-2]], u[1, col[2]] = s, s                   # dx2-y2
    u[2, col[-2]], u[2, col[2]] = 1j * s, -1j * s        # dxy
    u[3, col[-1]], u[3, col[1]] = s, -s                  # dxz
    u[4, col[-1]], u[4, col[1]] = 1j * s, 1j * s         # dyz
    return u


def _complex_eri(slater) -> np.ndarray:
    """Chemists' (m1 m2 | m3 m4) over complex harmonics, index = m + 2."""
    ms = range(-2, 3)
    g = np.zeros((5,) * 4)
    for m1 in ms:
        for m2 in ms:
            for m3 in ms:
                for m4 in ms:
                    # electron 1: m1 -> m2, electron 2: m3 -> m4
                    if m1 + m3 != m2 + m4:
                        continue
                    g[m1 + 2, m2 + 2, m3 + 2, m4 + 2] = sum(
                        fk * gaunt(k, 2, m1, 2, m2) * gaunt(k, 2, m4, 2, m3)
                        for k, fk in zip((0, 2, 4), slater))
    return g


def d_coulomb_integrals(rp: RacahParameters) -> IntegralSet:
    """Two-electron integrals of the real d shell (hartree, norb = 5)."""
    u = real_d_transform()
    gc = _complex_eri(slater_from_racah(rp))
    g = np.einsum("ia,jb,kc,ld,abcd->ijkl", u.conj(), u, u.conj(), u, gc, optimize=True)
    if np.abs(g.imag).max() > 1e-9 * max(1.0, np.abs(g.real).max()):
        raise AssertionError("real-harmonic integrals acquired an imaginary part")
    return IntegralSet(5, 0.0, None, to_hartree(g.real))


def crystal_field_oh(cf) -> np.ndarray:
    """Octahedral one-body matrix (hartree): e_g at +6Dq, t_2g at -4Dq."""
    dq = cf.Dq if isinstance(cf, CrystalField) else float(cf)
    return np.diag(to_hartree(np.array([6.0, 6.0, -4.0, -4.0, -4.0]) * dq))


def d_shell_integrals(rp: RacahParameters, dq: float) -> IntegralSet:
    return d_coulomb_integrals(rp).replace(h=crystal_field_oh(dq))


# ---------------------------------------------------------------------------
# Tanabe-Sugano sweeps

@dataclass
class Level:
    energy: float           # E/B above the ground level
    multiplicity: int
    degeneracy: int         # (2S+1) x orbital degeneracy
    vectors: np.ndarray = field(repr=False)


@dataclass
class TrackedCurve:
    label: str
    multiplicity: int
    degeneracy: int
    energies: np.ndarray
    flagged: list = field(default_factory=list)


@dataclass
class Crossing:
    kind: str               # "spin-crossover", "excited", or "flagged"
    dq_over_b: float
    energy: float
    labels: tuple
    slopes: tuple
    bracket: tuple


@dataclass
class TSCurve:
    n_electrons: int
    rp: RacahParameters
    dq_over_b: np.ndarray
    levels: list
    curves: list
    crossings: list = field(default_factory=list)

    def ground_multiplicity(self) -> np.ndarray:
        return np.array([lv[0].multiplicity for lv in self.levels])

    def lowest(self, multiplicity: int, exclude_ground: bool = False) -> np.ndarray:
        out = []
        for lv in self.levels:
            cands = [x.energy for x in lv if x.multiplicity == multiplicity]
            if exclude_ground and lv[0].multiplicity == multiplicity:
                cands = cands[1:]
            out.append(cands[0] if cands else np.nan)
        return np.array(out)

    def curve(self, label: str) -> TrackedCurve:
        for c in self.curves:
            if c.label == label:
                return c
        raise KeyError(label)

    def table(self):
        """Header and rows for CSV export (dq_over_b, then one column per curve)."""
        header = ["dq_over_b"] + [c.label for c in self.curves]
        rows = [[float(x)] + [float(c.energies[i]) for c in self.curves]
                for i, x in enumerate(self.dq_over_b)]
        return header, rows


def _sector(n: int) -> SectorSpec:
    if not 1 <= n <= 9:
        raise ParameterError(f"d^n needs 1 <= n <= 9, got {n}")
    return SectorSpec(5, (n + 1) // 2, n // 2)


def ts_levels(n: int, rp: RacahParameters, dq_over_b: float,
              degeneracy_tol: float = DEGENERACY_TOL) -> list:
    """Spin-labeled levels of d^n at one field strength, E/B above ground."""
    if rp.B <= 0:
        raise ParameterError("Tanabe-Sugano normalization needs B > 0")
    spec = _sector(n)
    basis = build_sector_basis(spec)
    ints = d_shell_integrals(rp, dq_over_b * rp.B)
    h = build_hamiltonian(basis, ints)
    spectrum = assign_spin(diagonalize(h), build_total_s2(basis), sz=spec.sz,
                           degeneracy_tol=degeneracy_tol)
    e = to_cm1(spectrum.eigenvalues - spectrum.eigenvalues[0]) / rp.B
    levels = []
    for group in group_degenerate(spectrum.eigenvalues, degeneracy_tol):
        mults = spectrum.multiplicities[group]
        # accidental degeneracies between spins are split into separate levels
        for m in sorted(set(mults.tolist())):
            idx = [i for i in group if spectrum.multiplicities[i] == m]
            levels.append(Level(float(np.mean(e[idx])), int(m), int(m) * len(idx),
                                spectrum.eigenvectors[:, idx]))
    levels.sort(key=lambda lv: (lv.energy, lv.multiplicity))
    e0 = levels[0].energy
    for lv in levels:
        lv.energy = max(lv.energy - e0, 0.0)
    return levels


def _overlap(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.sum((a.T @ b) ** 2) / a.shape[1])


def _track(levels: list, ambiguity: float = 0.25):
    """Follow each level of the most split point through the sweep."""
    npts = len(levels)
    ref = int(np.argmax([len(lv) for lv in levels]))
    ncur = len(levels[ref])
    energies = np.full((ncur, npts), np.nan)
    flagged = [[] for _ in range(ncur)]
    vec_at = [[None] * npts for _ in range(ncur)]
    for c, lv in enumerate(levels[ref]):
        energies[c, ref] = lv.energy
        vec_at[c][ref] = lv.vectors
    for direction in (1, -1):
        i = ref
        while 0 <= i + direction < npts:
            j = i + direction
            for c in range(ncur):
                v = vec_at[c][i]
                mult = levels[ref][c].multiplicity
                cands = [(k, _overlap(v, lv.vectors)) for k, lv in enumerate(levels[j])
                         if lv.multiplicity == mult]
                cands.sort(key=lambda x: -x[1])
                best, o = cands[0]
                if o < 0.5 or (len(cands) > 1 and cands[1][1] > o - ambiguity):
                    flagged[c].append((min(i, j), max(i, j)))
                target = levels[j][best].vectors
                proj = target @ (target.T @ v)
                q, _ = np.linalg.qr(proj)
                vec_at[c][j] = q[:, : v.shape[1]]
                energies[c, j] = levels[j][best].energy
            i = j
    return ref, energies, flagged, vec_at


def tanabe_sugano(n_electrons: int, rp: RacahParameters = FE2_DEFAULT,
                  dq_over_b: Sequence[float] = np.linspace(0.0, 4.0, 61),
                  degeneracy_tol: float = DEGENERACY_TOL, executor=None,
                  crossings: bool = True) -> TSCurve:
    """
    Sweep Dq/B and return labeled E/B curves re-zeroed at the ground level.

    Curves are tracked between points by multiplicity and subspace overlap,
    starting from the point where the spectrum is most split. ``executor``
    (any ``concurrent.futures`` executor) parallelizes the points.
    """
    xs = np.asarray(dq_over_b, dtype=float)
    if xs.size == 0:
        raise ParameterError("empty Dq/B range")
    if np.any(np.diff(xs) <= 0):
        raise ParameterError("Dq/B values must be strictly increasing")
    solve = lambda x: ts_levels(n_electrons, rp, x, degeneracy_tol)
    levels = list(executor.map(solve, xs)) if executor else [solve(x) for x in xs]
    ref, energies, flagged, _ = _track(levels)
    counts = {}
    curves = []
    for c, lv in enumerate(levels[ref]):
        key = (lv.multiplicity, lv.degeneracy)
        k = counts.get(key, 0)
        counts[key] = k + 1
        label = f"{lv.multiplicity}({lv.degeneracy})#{k}"
        curves.append(TrackedCurve(label, lv.multiplicity, lv.degeneracy, energies[c], flagged[c]))
    ts = TSCurve(n_electrons, rp, xs, levels, curves)
    if crossings:
        ts.crossings = find_crossings(ts, "ground")
        mults = sorted({lv.multiplicity for lv in levels[0]})
        for i, a in enumerate(mults):
            for b in mults[i + 1:]:
                ts.crossings += find_crossings(ts, "excited", (a, b))
    return ts


def _lowest_of(n, rp, mult, exclude_ground=False):
    def f(x):
        lv = ts_levels(n, rp, x)
        cands = [l.energy for l in lv if l.multiplicity == mult]
        if exclude_ground and lv[0].multiplicity == mult:
            cands = cands[1:]
        return cands[0] if cands else np.nan
    return f


def _slope(f, x, h=1e-5):
    return (f(x + h) - f(x - h)) / (2 * h)


def find_crossings(curve: TSCurve, which: str = "ground", labels=None,
                   xtol: float = 1e-10) -> list:
    """
    Bisection-refined crossings on a Tanabe-Sugano sweep.

    ``which="ground"`` finds changes of the ground multiplicity
    (spin crossover). ``which="excited"`` with ``labels=(m1, m2)`` finds
    sign changes between the lowest non-ground levels of multiplicities
    m1 and m2; with two curve labels it uses the tracked curves and flags
    intervals where tracking was ambiguous.
    """
    xs = curve.dq_over_b
    n, rp = curve.n_electrons, curve.rp
    out = []
    if which == "ground":
        gm = curve.ground_multiplicity()
        for i in np.nonzero(gm[1:] != gm[:-1])[0]:
            a, b = int(gm[i]), int(gm[i + 1])
            fa, fb = _lowest_of(n, rp, a), _lowest_of(n, rp, b)
            diff = lambda x: fa(x) - fb(x)
            x0 = brentq(diff, xs[i], xs[i + 1], xtol=xtol)
            out.append(Crossing("spin-crossover", x0, 0.0, (a, b),
                                (_slope(diff, x0),), (float(xs[i]), float(xs[i + 1]))))
        return out
    if which != "excited" or labels is None or len(labels) != 2:
        raise ParameterError("excited crossings need labels=(a, b)")
    la, lb = labels
    if isinstance(la, (int, np.integer)) and isinstance(lb, (int, np.integer)):
        ea = curve.lowest(la, exclude_ground=True)
        eb = curve.lowest(lb, exclude_ground=True)
        gm = curve.ground_multiplicity()
        d = ea - eb
        for i in range(len(xs) - 1):
            if not (np.isfinite(d[i]) and np.isfinite(d[i + 1])) or d[i] * d[i + 1] > 0:
                continue
            if gm[i] != gm[i + 1] or d[i] == d[i + 1]:
                continue
            fa = _lowest_of(n, rp, la, exclude_ground=True)
            fb = _lowest_of(n, rp, lb, exclude_ground=True)
            if d[i] == 0:
                x0 = xs[i]
            else:
                x0 = brentq(lambda x: fa(x) - fb(x), xs[i], xs[i + 1], xtol=xtol)
            out.append(Crossing("excited", x0, fa(x0), (la, lb),
                                (_slope(fa, x0), _slope(fb, x0)), (float(xs[i]), float(xs[i + 1]))))
        return out
    ca, cb = curve.curve(la), curve.curve(lb)
    d = ca.energies - cb.energies
    bad = set(map(tuple, ca.flagged)) | set(map(tuple, cb.flagged))
    for i in range(len(xs) - 1):
        if d[i] * d[i + 1] > 0 or d[i] == d[i + 1]:
            continue
        if (i, i + 1) in bad:
            out.append(Crossing("flagged", float("nan"), float("nan"), (la, lb), (), (xs[i], xs[i + 1])))
            continue
        # linear interpolation refined by bisection on the interpolant
        t = d[i] / (d[i] - d[i + 1])
        x0 = xs[i] + t * (xs[i + 1] - xs[i])
        e0 = ca.energies[i] + t * (ca.energies[i + 1] - ca.energies[i])
        sa = (ca.energies[i + 1] - ca.energies[i]) / (xs[i + 1] - xs[i])
        sb = (cb.energies[i + 1] - cb.energies[i]) / (xs[i + 1] - xs[i])
        out.append(Crossing("excited", x0, e0, (la, lb), (sa, sb), (xs[i], xs[i + 1])))
    return out
