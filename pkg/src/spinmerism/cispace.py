"""
Truncated CI spaces built from an inactive / active / virtual partition.

A determinant's excitation class counts the holes it leaves in the
inactive orbitals and the particles it puts in the virtual orbitals. Each
CI level admits a fixed set of classes:

========  ==========================================================
level     admitted (holes, particles)
========  ==========================================================
CAS       (0, 0)
CAS_S     CAS plus (1, 0), (0, 1), (1, 1)
DDC2      CAS_S plus (2, 0), (0, 2)
DDCI      DDC2 plus (2, 1), (1, 2); every class of the grid except (2, 2)
FCI       every determinant of the sector
========  ==========================================================

Classes depend only on orbital occupation counts, so every truncated space
is closed under spin flips and supports exact spin labeling.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParameterError
from .fockspace import Determinant, SectorBasis, SectorSpec, build_sector_basis, orbital_mask, popcount

__all__ = [
    "OrbitalPartition",
    "ExcitationClass",
    "CILevel",
    "CISpace",
    "classify",
    "classify_basis",
    "generate",
    "LADDER",
]


@dataclass(frozen=True)
class OrbitalPartition:
    inactive: tuple
    active: tuple
    virtual: tuple

    def __post_init__(self):
        sets = [tuple(sorted(int(p) for p in getattr(self, n))) for n in ("inactive", "active", "virtual")]
        for name, s in zip(("inactive", "active", "virtual"), sets):
            object.__setattr__(self, name, s)
        allorb = [p for s in sets for p in s]
        if len(set(allorb)) != len(allorb):
            raise ParameterError("orbital blocks overlap")
        if sorted(allorb) != list(range(len(allorb))):
            raise ParameterError(f"orbital blocks must cover 0..{len(allorb) - 1} exactly")

    @classmethod
    def from_sizes(cls, n_inactive: int, n_active: int, n_virtual: int) -> "OrbitalPartition":
        a = n_inactive + n_active
        return cls(tuple(range(n_inactive)), tuple(range(n_inactive, a)),
                   tuple(range(a, a + n_virtual)))

    @property
    def norb(self) -> int:
        return len(self.inactive) + len(self.active) + len(self.virtual)


class ExcitationClass(NamedTuple):
    holes: int
    particles: int

    @property
    def in_hierarchy(self) -> bool:
        return self.holes <= 2 and self.particles <= 2


class CILevel(enum.Enum):
    CAS = "CAS"
    CAS_S = "CAS_S"
    DDC2 = "DDC2"
    DDCI = "DDCI"
    FCI = "FCI"

    @property
    def classes(self):
        """Admitted classes; None means all."""
        return _ADMITTED[self]

    def admits(self, cls: ExcitationClass) -> bool:
        allowed = self.classes
        return allowed is None or tuple(cls) in allowed

    @classmethod
    def parse(cls, name) -> "CILevel":
        if isinstance(name, CILevel):
            return name
        key = str(name).upper().replace("+", "_").replace("-", "_").replace(" ", "")
        try:
            return cls[key]
        except KeyError:
            raise ParameterError(f"unknown CI level {name!r}") from None


_ADMITTED = {}
_ADMITTED[CILevel.CAS] = frozenset({(0, 0)})
_ADMITTED[CILevel.CAS_S] = _ADMITTED[CILevel.CAS] | {(1, 0), (0, 1), (1, 1)}
_ADMITTED[CILevel.DDC2] = _ADMITTED[CILevel.CAS_S] | {(2, 0), (0, 2)}
_ADMITTED[CILevel.DDCI] = _ADMITTED[CILevel.DDC2] | {(2, 1), (1, 2)}
_ADMITTED[CILevel.FCI] = None

LADDER = (CILevel.CAS, CILevel.CAS_S, CILevel.DDC2, CILevel.DDCI, CILevel.FCI)


@dataclass(frozen=True)
class CISpace:
    partition: OrbitalPartition
    level: CILevel
    basis: SectorBasis

    def __len__(self):
        return len(self.basis)


def classify(det: Determinant, part: OrbitalPartition) -> ExcitationClass:
    """(holes in inactive, particles in virtual) of one determinant."""
    if (det.alpha | det.beta) >> part.norb:
        raise ParameterError(f"{det} has orbitals beyond norb={part.norb}")
    mi, mv = orbital_mask(part.inactive), orbital_mask(part.virtual)
    n_in = popcount(det.alpha & mi) + popcount(det.beta & mi)
    n_virt = popcount(det.alpha & mv) + popcount(det.beta & mv)
    return ExcitationClass(2 * len(part.inactive) - n_in, n_virt)


def classify_basis(basis: SectorBasis, part: OrbitalPartition):
    """Arrays ``(holes, particles)`` for every determinant of ``basis``."""
    if basis.norb != part.norb:
        raise ParameterError(f"partition covers {part.norb} orbitals, basis has {basis.norb}")
    holes = 2 * len(part.inactive) - basis.occupations(part.inactive)
    particles = basis.occupations(part.virtual)
    return holes, particles


def _check_capacity(part: OrbitalPartition, spec: SectorSpec):
    ni, na = len(part.inactive), len(part.active)
    for n, name in ((spec.nalpha, "alpha"), (spec.nbeta, "beta")):
        if not ni <= n <= ni + na:
            raise ParameterError(
                f"{n} {name} electrons cannot fill {ni} inactive orbitals and fit "
                f"in {na} active ones; no reference determinant exists")


def generate(part: OrbitalPartition, level, spec: SectorSpec) -> CISpace:
    """Sector determinants whose excitation class the level admits."""
    level = CILevel.parse(level)
    if part.norb != spec.norb:
        raise ParameterError(f"partition covers {part.norb} orbitals, sector has {spec.norb}")
    _check_capacity(part, spec)
    full = build_sector_basis(spec)
    if level is CILevel.FCI:
        return CISpace(part, level, full)
    holes, particles = classify_basis(full, part)
    keep = np.zeros(len(full), dtype=bool)
    for h, p in level.classes:
        keep |= (holes == h) & (particles == p)
    basis = SectorBasis(full.spec, full.alpha[keep], full.beta[keep],
                        restricted=not keep.all())
    return CISpace(part, level, basis)

