"""
Crossing detection for parameter sweeps and CI-ladder convergence reports.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, Optional, Sequence

import numpy as np

from .cispace import LADDER, CILevel, OrbitalPartition, generate
from .eigensolve import DENSE_MAX, assign_spin, diagonalize
from .errors import ParameterError
from .fockspace import SectorSpec
from .secondq import IntegralSet, build_hamiltonian, build_total_s2
from .units import to_cm1

__all__ = [
    "GAP_TOL",
    "REFINE_BUDGET",
    "Series",
    "CrossingReport",
    "detect_avoided_crossing",
    "sweep_crossing",
    "dominant_spin",
    "ConvergenceRow",
    "ConvergenceReport",
    "ci_convergence",
]

GAP_TOL = 0.01          # cm^-1, exact vs avoided
REFINE_BUDGET = 40      # golden-section re-solves
FCI_MAX = 20000
_INVPHI = (np.sqrt(5.0) - 1.0) / 2.0


@dataclass
class Series:
    """One tracked curve: parameter grid, energies (cm^-1), optional weights."""

    x: np.ndarray
    energy: np.ndarray
    weights: Optional[Sequence[dict]] = None
    label: str = ""

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.energy = np.asarray(self.energy, dtype=float)
        if self.x.shape != self.energy.shape or self.x.ndim != 1:
            raise ParameterError("series needs matching one-dimensional x and energy")
        if self.weights is not None and len(self.weights) != self.x.size:
            raise ParameterError("one weight map per grid point is required")


@dataclass
class CrossingReport:
    kind: str                     # "exact-crossing", "avoided-crossing", or "none"
    location: float
    min_gap: float
    states: tuple
    grid_min_gap: float
    weights_at: tuple = ()        # joint weights of both states at closest approach
    dominant_before: tuple = ()   # dominant fragment-A spin of each state at the grid point left of location
    dominant_after: tuple = ()
    evaluations: int = 0

    @property
    def swapped(self) -> bool:
        """Whether each state's dominant fragment-A spin changes across the location."""
        if not self.dominant_before or not self.dominant_after:
            return False
        return all(b != a for b, a in zip(self.dominant_before, self.dominant_after))

    def as_dict(self) -> dict:
        return {
            "kind": self.kind,
            "location": self.location,
            "min_gap_cm1": self.min_gap,
            "grid_min_gap_cm1": self.grid_min_gap,
            "states": list(self.states),
            "dominant_before": list(self.dominant_before),
            "dominant_after": list(self.dominant_after),
            "swapped": self.swapped,
            "weights_at": [_weights_list(w) for w in self.weights_at],
        }


def _weights_list(w: dict) -> list:
    return [{"s_a": a, "s_b": b, "weight": v} for (a, b), v in sorted(w.items())]


def dominant_spin(weights: dict) -> float:
    """Fragment-A spin carrying the largest marginal weight."""
    marg: Dict[float, float] = {}
    for (a, _), v in weights.items():
        marg[a] = marg.get(a, 0.0) + v
    return max(sorted(marg), key=lambda a: marg[a])


def _golden(f: Callable[[float], float], lo: float, hi: float, budget: int):
    """Golden-section search; returns every (x, f(x)) evaluated."""
    seen = []
    c = hi - _INVPHI * (hi - lo)
    d = lo + _INVPHI * (hi - lo)
    fc, fd = f(c), f(d)
    seen += [(c, fc), (d, fd)]
    for _ in range(max(budget - 2, 0)):
        if fc < fd:
            hi, d, fd = d, c, fc
            c = hi - _INVPHI * (hi - lo)
            fc = f(c)
            seen.append((c, fc))
        else:
            lo, c, fc = c, d, fd
            d = lo + _INVPHI * (hi - lo)
            fd = f(d)
            seen.append((d, fd))
    return seen


def _kink(points, center: float):
    """
    Where the line through the two evaluated points just left of ``center``
    meets the line through the two just right of it, if they form a V. An
    exact crossing has a gap |a (x - x0)|, which this recovers in one step.
    """
    left = sorted(p for p in points if p[0] < center)[-2:]
    right = sorted(p for p in points if p[0] > center)[:2]
    if len(left) < 2 or len(right) < 2:
        return None
    (x1, y1), (x2, y2) = left
    (x3, y3), (x4, y4) = right
    s1 = (y2 - y1) / (x2 - x1)
    s2 = (y4 - y3) / (x4 - x3)
    if not (s1 < 0 < s2):
        return None
    x0 = (y3 - s2 * x3 - y1 + s1 * x1) / (s1 - s2)
    return x0 if x2 <= x0 <= x3 else None


def detect_avoided_crossing(a: Series, b: Series, gap_tol: float = GAP_TOL,
                            resolve: Optional[Callable[[float], tuple]] = None,
                            budget: int = REFINE_BUDGET) -> CrossingReport:
    """
    Locate and classify the closest approach of two tracked curves.

    The grid interval around the smallest ``|E_a - E_b|`` is refined by
    golden-section search on ``resolve(x) -> (E_a, E_b, w_a, w_b)`` (weights
    may be None), followed by one line-intersection step that pins down
    a V-shaped exact crossing. The reported gap is never larger than the
    best grid gap. A minimum at either end of the grid means no crossing
    in range. The result does not depend on the order of ``a`` and ``b``,
    apart from the order of per-state fields.
    """
    if a.x.shape != b.x.shape or np.any(a.x != b.x):
        raise ParameterError("both series must share the parameter grid")
    x = a.x
    if x.size < 3:
        raise ParameterError("need at least three grid points")
    gaps = np.abs(a.energy - b.energy)
    k = int(np.argmin(gaps))
    grid_gap = float(gaps[k])
    states = (a.label, b.label)
    if k == 0 or k == x.size - 1 or np.all(gaps == gaps[k]):
        return CrossingReport("none", float(x[k]), grid_gap, states, grid_gap)
    best_x, best_gap = float(x[k]), grid_gap
    evaluations = 0
    cache = {}

    def gap_at(v):
        nonlocal evaluations
        if v not in cache:
            evaluations += 1
            cache[v] = resolve(v)
        ea, eb = cache[v][:2]
        return abs(ea - eb)

    best_w = None
    if resolve is not None:
        seen = _golden(gap_at, float(x[k - 1]), float(x[k + 1]), budget)
        seen += [(float(x[k - 1]), float(gaps[k - 1])), (float(x[k + 1]), float(gaps[k + 1]))]
        center = min(seen, key=lambda p: p[1])[0]
        x0 = _kink(seen, center)
        if x0 is not None:
            seen.append((x0, gap_at(x0)))
        for xv, gv in seen:
            if gv < best_gap:
                best_x, best_gap = xv, gv
        if best_x in cache:
            best_w = cache[best_x][2:4]
    if best_w is None and a.weights is not None and b.weights is not None:
        best_w = (a.weights[k], b.weights[k])
    kind = "exact-crossing" if best_gap < gap_tol else "avoided-crossing"
    before = after = ()
    if a.weights is not None and b.weights is not None:
        # grid points bracketing the closest approach
        left = int(np.searchsorted(x, best_x, side="left")) - 1
        right = int(np.searchsorted(x, best_x, side="right"))
        left, right = max(left, 0), min(right, x.size - 1)
        before = (dominant_spin(a.weights[left]), dominant_spin(b.weights[left]))
        after = (dominant_spin(a.weights[right]), dominant_spin(b.weights[right]))
    weights_at = tuple(w for w in best_w) if best_w is not None and all(
        w is not None for w in best_w) else ()
    return CrossingReport(kind, float(best_x), float(best_gap), states, grid_gap,
                          weights_at, before, after, evaluations)


def sweep_crossing(result, probe, gap_tol: float = GAP_TOL,
                   budget: int = REFINE_BUDGET) -> CrossingReport:
    """Crossing analysis of a spinmerism quintet sweep, re-solving with ``probe``."""
    x = result.values
    series = [Series(x, result.curve(k), [p.weights[k] for p in result.points], f"Q{k + 1}")
              for k in range(2)]

    def resolve(v):
        pt = probe.point(v)
        return pt.energies[0], pt.energies[1], pt.weights[0], pt.weights[1]

    return detect_avoided_crossing(series[0], series[1], gap_tol, resolve, budget)


# ---------------------------------------------------------------------------
# CI ladder

@dataclass
class ConvergenceRow:
    level: CILevel
    dimension: int
    ground_energy: float                 # hartree
    singlet_triplet_cm1: Optional[float]  # E(lowest S=1) - E(lowest S=0)


@dataclass
class ConvergenceReport:
    rows: list = field(default_factory=list)

    def energies(self) -> np.ndarray:
        return np.array([r.ground_energy for r in self.rows])

    def dimensions(self) -> list:
        return [r.dimension for r in self.rows]

    def is_variational(self, tol: float = 1e-10) -> bool:
        e = self.energies()
        return bool(np.all(np.diff(e) <= tol * np.maximum(1.0, np.abs(e[1:]))))


def _lowest_by_spin(op, s2, sector, nroots: int):
    spec = diagonalize(op, k=None if op.shape[0] <= DENSE_MAX else nroots)
    spec = assign_spin(spec, s2, sz=sector.sz)
    out = {}
    for e, s in zip(spec.eigenvalues, spec.spins):
        out.setdefault(float(s), float(e))
    return spec.eigenvalues[0], out


def ci_convergence(ints: IntegralSet, part: OrbitalPartition, sector: SectorSpec,
                   levels: Sequence = LADDER, fci_max: int = FCI_MAX,
                   nroots: int = 20) -> ConvergenceReport:
    """
    Ground energy and singlet-triplet gap along the CI ladder.

    FCI is skipped when its dimension exceeds ``fci_max``.
    """
    if ints.norb != sector.norb:
        raise ParameterError("integrals and sector disagree on norb")
    report = ConvergenceReport()
    for level in levels:
        space = generate(part, level, sector)
        if CILevel.parse(level) is CILevel.FCI and len(space) > fci_max:
            continue
        h = build_hamiltonian(space.basis, ints)
        e0, lowest = _lowest_by_spin(h, build_total_s2(space.basis), sector, nroots)
        st = None
        if 0.0 in lowest and 1.0 in lowest:
            st = float(to_cm1(lowest[1.0] - lowest[0.0]))
        report.rows.append(ConvergenceRow(space.level, len(space), float(e0), st))
    return report
