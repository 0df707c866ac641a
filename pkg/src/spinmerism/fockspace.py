"""
Determinant bases for fixed particle number and Sz.

A determinant is stored as two bit strings over spatial orbitals, one per
spin channel. Fermionic signs follow a single ordering of spin orbitals:
all spin-up orbitals by ascending index, then all spin-down orbitals.
Bases are sorted lexicographically on the ``(alpha, beta)`` pair of
unsigned integers, which is the same as sorting the packed key
``alpha << norb | beta``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import combinations
from math import comb
from typing import Iterable, NamedTuple, Optional, Sequence

import numpy as np

from .errors import ParameterError

__all__ = [
    "MAX_NORB",
    "UP",
    "DOWN",
    "Determinant",
    "SectorSpec",
    "SectorBasis",
    "build_sector_basis",
    "occupation_strings",
    "apply_excitation",
    "create",
    "annihilate",
    "popcount",
    "orbital_mask",
    "parity_block",
]

MAX_NORB = 32
UP = 0
DOWN = 1


def popcount(x):
    """Number of set bits; works on Python ints and uint64 arrays."""
    if isinstance(x, (int, np.integer)):
        return int(x).bit_count()
    return np.bitwise_count(x)


class Determinant(NamedTuple):
    alpha: int
    beta: int

    def occupation(self, p: int) -> int:
        return ((self.alpha >> p) & 1) + ((self.beta >> p) & 1)

    def nelec(self) -> int:
        return popcount(self.alpha) + popcount(self.beta)

    def to_string(self, norb: int) -> str:
        """Orbital-by-orbital picture, e.g. ``'2ab0'``."""
        chars = []
        for p in range(norb):
            a = (self.alpha >> p) & 1
            b = (self.beta >> p) & 1
            chars.append("2" if a and b else "a" if a else "b" if b else "0")
        return "".join(chars)


@dataclass(frozen=True)
class SectorSpec:
    norb: int
    nalpha: int
    nbeta: int

    def __post_init__(self):
        if not 0 < self.norb <= MAX_NORB:
            raise ParameterError(f"norb must be in 1..{MAX_NORB}, got {self.norb}")
        for name in ("nalpha", "nbeta"):
            n = getattr(self, name)
            if not 0 <= n <= self.norb:
                raise ParameterError(f"{name}={n} outside 0..norb={self.norb}")

    @property
    def nelec(self) -> int:
        return self.nalpha + self.nbeta

    @property
    def sz(self) -> float:
        return 0.5 * (self.nalpha - self.nbeta)

    @property
    def full_dim(self) -> int:
        return comb(self.norb, self.nalpha) * comb(self.norb, self.nbeta)


def occupation_strings(norb: int, nocc: int) -> np.ndarray:
    """All bit strings with ``nocc`` of ``norb`` bits set, ascending."""
    strings = [sum(1 << i for i in c) for c in combinations(range(norb), nocc)]
    return np.array(sorted(strings), dtype=np.uint64)


class SectorBasis:
    """
    Ordered determinant list of one (norb, nalpha, nbeta) sector.

    The list is either the complete sector or a subset of it (a truncated
    CI space). Instances are treated as immutable.
    """

    def __init__(self, spec: SectorSpec, alpha: np.ndarray, beta: np.ndarray,
                 restricted: bool = False):
        alpha = np.asarray(alpha, dtype=np.uint64)
        beta = np.asarray(beta, dtype=np.uint64)
        keys = (alpha << np.uint64(spec.norb)) | beta
        order = np.argsort(keys, kind="stable")
        keys = keys[order]
        if keys.size > 1 and np.any(keys[1:] == keys[:-1]):
            raise ParameterError("duplicate determinants in basis")
        self.spec = spec
        self.alpha = alpha[order]
        self.beta = beta[order]
        self.keys = keys
        self.restricted = restricted
        for arr in (self.alpha, self.beta, self.keys):
            arr.setflags(write=False)
        self._index = None

    @classmethod
    def from_dets(cls, spec: SectorSpec, dets: Iterable[Determinant]) -> "SectorBasis":
        dets = list(dets)
        alpha = np.array([d.alpha for d in dets], dtype=np.uint64)
        beta = np.array([d.beta for d in dets], dtype=np.uint64)
        for d in dets:
            if popcount(d.alpha) != spec.nalpha or popcount(d.beta) != spec.nbeta:
                raise ParameterError(f"{d} does not belong to sector {spec}")
            if (d.alpha | d.beta) >> spec.norb:
                raise ParameterError(f"{d} has bits at or above norb={spec.norb}")
        return cls(spec, alpha, beta, restricted=len(dets) != spec.full_dim)

    def __len__(self) -> int:
        return self.keys.size

    def __getitem__(self, i: int) -> Determinant:
        return Determinant(int(self.alpha[i]), int(self.beta[i]))

    def __iter__(self):
        for a, b in zip(self.alpha.tolist(), self.beta.tolist()):
            yield Determinant(a, b)

    @property
    def dets(self) -> list:
        return list(self)

    @property
    def index(self) -> dict:
        """Map Determinant -> position."""
        if self._index is None:
            self._index = {d: i for i, d in enumerate(self)}
        return self._index

    @property
    def norb(self) -> int:
        return self.spec.norb

    def lookup(self, alpha, beta) -> np.ndarray:
        """Positions of the given determinants, -1 where absent."""
        alpha = np.asarray(alpha, dtype=np.uint64)
        beta = np.asarray(beta, dtype=np.uint64)
        keys = (alpha << np.uint64(self.spec.norb)) | beta
        pos = np.searchsorted(self.keys, keys)
        pos = np.minimum(pos, max(len(self) - 1, 0))
        found = self.keys[pos] == keys if len(self) else np.zeros(keys.shape, bool)
        return np.where(found, pos, -1)

    def occupations(self, orbitals: Optional[Sequence[int]] = None) -> np.ndarray:
        """Electron count per determinant on the given orbitals."""
        mask = orbital_mask(range(self.norb) if orbitals is None else orbitals)
        m = np.uint64(mask)
        return (popcount(self.alpha & m) + popcount(self.beta & m)).astype(np.int64)

    def __repr__(self):
        kind = "restricted" if self.restricted else "full"
        return f"SectorBasis({self.spec}, dim={len(self)}, {kind})"


def orbital_mask(orbitals: Iterable[int]) -> int:
    mask = 0
    for p in orbitals:
        mask |= 1 << int(p)
    return mask


@lru_cache(maxsize=64)
def build_sector_basis(spec: SectorSpec) -> SectorBasis:
    """Complete, lexicographically ordered determinant list of a sector."""
    if not isinstance(spec, SectorSpec):
        raise ParameterError("expected a SectorSpec")
    a = occupation_strings(spec.norb, spec.nalpha)
    b = occupation_strings(spec.norb, spec.nbeta)
    alpha = np.repeat(a, b.size)
    beta = np.tile(b, a.size)
    return SectorBasis(spec, alpha, beta, restricted=False)


def parity_block(basis: SectorBasis, odd_sets: Sequence[Sequence[int]],
                 parities: Sequence[int]) -> SectorBasis:
    """
    Determinants of ``basis`` with a given parity under orbital reflections.

    Each entry of ``odd_sets`` lists the orbitals that change sign under
    one reflection; a determinant's parity for it is the electron count on
    those orbitals mod 2. Any Hamiltonian invariant under the reflections
    is block diagonal in these labels.
    """
    if len(odd_sets) != len(parities):
        raise ParameterError("need one parity per reflection")
    keep = np.ones(len(basis), dtype=bool)
    for orbs, par in zip(odd_sets, parities):
        if par not in (0, 1):
            raise ParameterError(f"parity must be 0 or 1, got {par}")
        m = np.uint64(orbital_mask(orbs))
        keep &= (popcount(basis.alpha & m) + popcount(basis.beta & m)) % 2 == par
    return SectorBasis(basis.spec, basis.alpha[keep], basis.beta[keep],
                       restricted=bool(keep.size and not keep.all()) or basis.restricted)


def _channel(det: Determinant, spin: int) -> int:
    if spin == UP:
        return det.alpha
    if spin == DOWN:
        return det.beta
    raise ParameterError(f"spin must be UP (0) or DOWN (1), got {spin!r}")


def _with_channel(det: Determinant, spin: int, bits: int) -> Determinant:
    return Determinant(bits, det.beta) if spin == UP else Determinant(det.alpha, bits)


def _sign_below(det: Determinant, p: int, spin: int) -> int:
    # occupied spin orbitals preceding (p, spin) in the up-then-down order
    below = (1 << p) - 1
    n = popcount(det.alpha & below) if spin == UP else (
        popcount(det.alpha) + popcount(det.beta & below))
    return -1 if n & 1 else 1


def create(det: Determinant, p: int, spin: int):
    """``a+_{p,spin}|det>`` as ``(det', phase)``, or None if occupied."""
    bits = _channel(det, spin)
    if (bits >> p) & 1:
        return None
    return _with_channel(det, spin, bits | (1 << p)), _sign_below(det, p, spin)


def annihilate(det: Determinant, p: int, spin: int):
    """``a_{p,spin}|det>`` as ``(det', phase)``, or None if empty."""
    bits = _channel(det, spin)
    if not (bits >> p) & 1:
        return None
    return _with_channel(det, spin, bits & ~(1 << p)), _sign_below(det, p, spin)


def apply_excitation(det: Determinant, p: int, q: int, spin: int):
    """
    Apply ``a+_{p,spin} a_{q,spin}`` to a determinant.

    Returns ``(new_det, phase)`` or None when orbital ``q`` is empty or
    orbital ``p`` is already filled (``p != q``) in that spin channel. The
    phase is the parity of occupied orbitals of the same channel strictly
    between ``p`` and ``q``.
    """
    bits = _channel(det, spin)
    if not (bits >> q) & 1:
        return None
    if p == q:
        return det, 1
    if (bits >> p) & 1:
        return None
    lo, hi = min(p, q), max(p, q)
    between = ((1 << hi) - 1) & ~((1 << (lo + 1)) - 1)
    phase = -1 if popcount(bits & between) & 1 else 1
    return _with_channel(det, spin, bits ^ (1 << p) ^ (1 << q)), phase
