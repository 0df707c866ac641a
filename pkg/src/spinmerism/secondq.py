"""
Sparse matrices of second-quantized operators in a determinant basis.

Two routes build the electronic Hamiltonian

    H = E_core + sum_pq h_pq E_pq + 1/2 sum_pqrs (pq|rs) (E_pq E_rs - d_qr E_ps)

``"composition"`` multiplies sparse spin-summed excitation matrices (the
products are cached per basis as a coupling template, so rebuilding ``H``
for new integrals is one sparse mat-vec), and ``"slater-condon"`` evaluates
determinant pairs directly. Spin operators are always assembled from
sparse ladder matrices.
"""

from __future__ import annotations

import weakref
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import ParameterError, SpinmerismError
from .fockspace import (
    DOWN,
    UP,
    SectorBasis,
    SectorSpec,
    build_sector_basis,
    orbital_mask,
    popcount,
)

__all__ = [
    "IntegralSet",
    "Fragment",
    "symmetrize_eri",
    "random_integral_set",
    "build_hamiltonian",
    "build_excitation",
    "build_sz",
    "build_number",
    "build_spin_ladder",
    "build_total_s2",
    "build_local_s2",
    "build_spin_dot",
    "check_symmetric",
    "commutator_norm",
]

SYMMETRY_TOL = 1e-12


def symmetrize_eri(g: np.ndarray) -> np.ndarray:
    """Average a 4-index array over the 8 real-orbital permutations."""
    g = np.asarray(g, dtype=float)
    perms = [
        g,
        g.transpose(1, 0, 2, 3),
        g.transpose(0, 1, 3, 2),
        g.transpose(1, 0, 3, 2),
        g.transpose(2, 3, 0, 1),
        g.transpose(3, 2, 0, 1),
        g.transpose(2, 3, 1, 0),
        g.transpose(3, 2, 1, 0),
    ]
    return sum(perms) / 8.0


@dataclass(frozen=True)
class IntegralSet:
    """
    Coefficients of a spin-free electronic Hamiltonian, in hartree.

    ``g[p, q, r, s]`` is the chemists' integral (pq|rs).
    """

    norb: int
    core_energy: float = 0.0
    h: np.ndarray = None
    g: np.ndarray = None

    def __post_init__(self):
        n = self.norb
        h = np.zeros((n, n)) if self.h is None else np.array(self.h, dtype=float)
        g = np.zeros((n,) * 4) if self.g is None else np.array(self.g, dtype=float)
        if h.shape != (n, n) or g.shape != (n,) * 4:
            raise ParameterError(f"integral shapes {h.shape}, {g.shape} do not match norb={n}")
        if not (np.isfinite(h).all() and np.isfinite(g).all() and np.isfinite(self.core_energy)):
            raise ParameterError("integrals must be finite")
        scale = max(1.0, np.abs(h).max(initial=0.0), np.abs(g).max(initial=0.0))
        if np.abs(h - h.T).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise ParameterError("one-body integrals are not symmetric")
        if np.abs(g - symmetrize_eri(g)).max(initial=0.0) > SYMMETRY_TOL * scale:
            raise ParameterError("two-body integrals lack 8-fold permutational symmetry")
        h.setflags(write=False)
        g.setflags(write=False)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "g", g)
        object.__setattr__(self, "core_energy", float(self.core_energy))

    @classmethod
    def zeros(cls, norb: int, core_energy: float = 0.0) -> "IntegralSet":
        return cls(norb, core_energy)

    def replace(self, **changes) -> "IntegralSet":
        kw = dict(norb=self.norb, core_energy=self.core_energy, h=self.h, g=self.g)
        kw.update(changes)
        return IntegralSet(**kw)

    def rotated(self, u: np.ndarray) -> "IntegralSet":
        """Integrals in the orbital basis ``phi'_i = sum_p u[p, i] phi_p``."""
        u = np.asarray(u, dtype=float)
        h = u.T @ self.h @ u
        g = np.einsum("pqrs,pi,qj,rk,sl->ijkl", self.g, u, u, u, u, optimize=True)
        return self.replace(h=(h + h.T) / 2, g=symmetrize_eri(g))


def random_integral_set(norb: int, seed=None, scale: float = 1.0) -> IntegralSet:
    """Random symmetric integrals with a dominant positive Coulomb diagonal."""
    rng = np.random.default_rng(seed)
    h = rng.normal(size=(norb, norb)) * scale
    h = (h + h.T) / 2
    g = rng.normal(size=(norb,) * 4) * 0.1 * scale
    for p in range(norb):
        for q in range(norb):
            g[p, p, q, q] += 0.5 * scale
    return IntegralSet(norb, float(rng.normal()), h, symmetrize_eri(g))


@dataclass(frozen=True)
class Fragment:
    """A set of spatial orbitals treated as one local unit (e.g. a metal)."""

    orbitals: tuple
    name: str = field(default="", compare=False)

    def __post_init__(self):
        orbs = tuple(sorted({int(p) for p in self.orbitals}))
        if any(p < 0 for p in orbs):
            raise ParameterError("fragment orbitals must be non-negative")
        object.__setattr__(self, "orbitals", orbs)

    @property
    def mask(self) -> int:
        return orbital_mask(self.orbitals)

    def check(self, norb: int):
        if self.orbitals and self.orbitals[-1] >= norb:
            raise ParameterError(f"fragment {self.orbitals} exceeds norb={norb}")

    def __len__(self):
        return len(self.orbitals)


def _as_fragment(frag, norb) -> Fragment:
    if frag is None:
        frag = Fragment(tuple(range(norb)))
    elif not isinstance(frag, Fragment):
        frag = Fragment(tuple(frag))
    frag.check(norb)
    return frag


# ---------------------------------------------------------------------------
# excitation operators

_ONE = np.uint64(1)


def _hop(strings: np.ndarray, p: int, q: int):
    """Where a+_p a_q acts within one spin channel, with the resulting strings and phases."""
    occ_q = ((strings >> np.uint64(q)) & _ONE).astype(bool)
    if p == q:
        return occ_q, strings, np.ones(strings.shape)
    occ_p = ((strings >> np.uint64(p)) & _ONE).astype(bool)
    mask = occ_q & ~occ_p
    new = strings ^ np.uint64((1 << p) | (1 << q))
    lo, hi = min(p, q), max(p, q)
    between = np.uint64(((1 << hi) - 1) & ~((1 << (lo + 1)) - 1))
    phase = 1.0 - 2.0 * (popcount(strings & between) & 1)
    return mask, new, phase


def _excitation_matrix(src: SectorBasis, dst: SectorBasis, p: int, q: int) -> sp.csr_matrix:
    rows, cols, vals = [], [], []
    for spin in (UP, DOWN):
        strings = src.alpha if spin == UP else src.beta
        mask, new, phase = _hop(strings, p, q)
        idx = np.nonzero(mask)[0]
        if spin == UP:
            pos = dst.lookup(new[idx], src.beta[idx])
        else:
            pos = dst.lookup(src.alpha[idx], new[idx])
        keep = pos >= 0
        rows.append(pos[keep])
        cols.append(idx[keep])
        vals.append(phase[idx][keep])
    m = sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(len(dst), len(src)),
    ).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def build_excitation(basis: SectorBasis, p: int, q: int) -> sp.csr_matrix:
    """Spin-summed ``E_pq = sum_s a+_{ps} a_{qs}`` in ``basis``."""
    n = basis.norb
    if not (0 <= p < n and 0 <= q < n):
        raise ParameterError(f"orbital indices ({p}, {q}) outside 0..{n - 1}")
    return _excitation_matrix(basis, basis, p, q)


class _Template:
    """
    Linear map from (h, g) to the nonzero entries of H on one basis.

    Row k of ``one`` / ``two`` gives entry ``(rows[k], cols[k])`` of H as a
    combination of ``h.ravel()`` / ``g.ravel()``.
    """

    def __init__(self, basis: SectorBasis):
        n = basis.norb
        full = build_sector_basis(basis.spec) if basis.restricted else basis
        dim = len(basis)
        pairs = [(p, q) for p in range(n) for q in range(n)]
        e_bb = {pq: _excitation_matrix(basis, basis, *pq) for pq in pairs}
        if full is basis:
            e_in = e_out = e_bb
        else:
            e_in = {pq: _excitation_matrix(basis, full, *pq) for pq in pairs}
            e_out = {pq: _excitation_matrix(full, basis, *pq) for pq in pairs}

        one_r, one_c, one_v, one_k = [], [], [], []
        for (p, q), m in e_bb.items():
            c = m.tocoo()
            one_r.append(c.row)
            one_c.append(c.col)
            one_v.append(c.data)
            one_k.append(np.full(c.nnz, p * n + q))
        two_r, two_c, two_v, two_k = [], [], [], []
        for (p, q) in pairs:
            for (r, s) in pairs:
                m = e_out[p, q] @ e_in[r, s]
                if q == r:
                    m = m - e_bb[p, s]
                c = m.tocoo()
                nz = c.data != 0
                two_r.append(c.row[nz])
                two_c.append(c.col[nz])
                two_v.append(c.data[nz])
                two_k.append(np.full(int(nz.sum()), ((p * n + q) * n + r) * n + s))

        r1, c1 = np.concatenate(one_r), np.concatenate(one_c)
        r2, c2 = np.concatenate(two_r), np.concatenate(two_c)
        keys1 = r1.astype(np.int64) * dim + c1
        keys2 = r2.astype(np.int64) * dim + c2
        diag = np.arange(dim, dtype=np.int64) * (dim + 1)
        keys, inverse = np.unique(np.concatenate([keys1, keys2, diag]), return_inverse=True)
        inv1 = inverse[: keys1.size]
        inv2 = inverse[keys1.size: keys1.size + keys2.size]
        self.diag_pos = inverse[keys1.size + keys2.size:]
        self.rows = (keys // dim).astype(np.int32)
        self.cols = (keys % dim).astype(np.int32)
        self.dim = dim
        self.one = sp.csr_matrix(
            (np.concatenate(one_v), (inv1, np.concatenate(one_k))), shape=(keys.size, n * n))
        self.two = sp.csr_matrix(
            (np.concatenate(two_v), (inv2, np.concatenate(two_k))), shape=(keys.size, n ** 4))

    def assemble(self, ints: IntegralSet) -> sp.csr_matrix:
        data = self.one @ ints.h.ravel() + 0.5 * (self.two @ ints.g.ravel())
        data[self.diag_pos] += ints.core_energy
        return sp.csr_matrix((data, (self.rows, self.cols)), shape=(self.dim, self.dim))


_templates: "weakref.WeakKeyDictionary[SectorBasis, _Template]" = weakref.WeakKeyDictionary()


def _template(basis: SectorBasis) -> _Template:
    t = _templates.get(basis)
    if t is None:
        t = _templates[basis] = _Template(basis)
    return t


def check_symmetric(m, tol: float = SYMMETRY_TOL, what: str = "operator") -> float:
    """Raise if ``m`` deviates from symmetry by more than ``tol`` (relative)."""
    diff = abs(m - m.T)
    dev = diff.max() if diff.nnz else 0.0
    scale = max(1.0, abs(m).max() if m.nnz else 0.0)
    if dev > tol * scale:
        raise SpinmerismError(f"{what} not symmetric: max |A - A^T| = {dev:.3e}")
    return float(dev)


def _finalize(m, what) -> sp.csr_matrix:
    check_symmetric(m, what=what)
    m = ((m + m.T) * 0.5).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m


def build_hamiltonian(basis: SectorBasis, ints: IntegralSet,
                      method: str = "composition") -> sp.csr_matrix:
    """Hamiltonian matrix of ``ints`` in ``basis`` (hartree)."""
    if ints.norb != basis.norb:
        raise ParameterError(f"integrals have norb={ints.norb}, basis has {basis.norb}")
    if method == "composition":
        m = _template(basis).assemble(ints)
    elif method == "slater-condon":
        m = _slater_condon(basis, ints)
    else:
        raise ParameterError(f"unknown method {method!r}")
    return _finalize(m, "Hamiltonian")


# ---------------------------------------------------------------------------
# Slater-Condon rules over spin orbitals (up block first, then down block)

def _packed(alpha: int, beta: int, norb: int) -> int:
    return alpha | (beta << norb)


def _bits(x: int):
    out = []
    while x:
        low = x & -x
        out.append(low.bit_length() - 1)
        x ^= low
    return out


def _apply(bits: int, pos: int, create: bool):
    sign = -1 if ((bits & ((1 << pos) - 1)).bit_count() & 1) else 1
    if create:
        return (None, 0) if (bits >> pos) & 1 else (bits | (1 << pos), sign)
    return (bits & ~(1 << pos), sign) if (bits >> pos) & 1 else (None, 0)


def _string_sign(bits: int, ops) -> int:
    """Sign of applying (pos, create) operators right-to-left order given."""
    sign = 1
    for pos, cr in ops:
        bits, s = _apply(bits, pos, cr)
        sign *= s
    return sign


def _slater_condon(basis: SectorBasis, ints: IntegralSet) -> sp.csr_matrix:
    n = basis.norb
    h, g = ints.h, ints.g
    packed = [_packed(d.alpha, d.beta, n) for d in basis]
    occ = [_bits(x) for x in packed]
    rows, cols, vals = [], [], []

    def spat(k):
        return k % n

    def spin(k):
        return k // n

    for i, bi in enumerate(packed):
        oi = occ[i]
        for j, bj in enumerate(packed):
            diff = bi ^ bj
            deg = diff.bit_count()
            if deg > 4:
                continue
            if deg == 0:
                e = ints.core_energy
                for a in oi:
                    e += h[spat(a), spat(a)]
                for a in oi:
                    for b in oi:
                        e += 0.5 * g[spat(a), spat(a), spat(b), spat(b)]
                        if spin(a) == spin(b):
                            e -= 0.5 * g[spat(a), spat(b), spat(b), spat(a)]
                val = e
            elif deg == 2:
                (hole,) = _bits(bi & diff)
                (part,) = _bits(bj & diff)
                if spin(hole) != spin(part):
                    continue
                sign = _string_sign(bi, [(hole, False), (part, True)])
                a, x = spat(part), spat(hole)
                e = h[a, x]
                for k in oi:
                    if k == hole:
                        continue
                    e += g[a, x, spat(k), spat(k)]
                    if spin(k) == spin(hole):
                        e -= g[a, spat(k), spat(k), x]
                val = sign * e
            else:
                h1, h2 = _bits(bi & diff)
                p1, p2 = _bits(bj & diff)
                sign = _string_sign(bi, [(h1, False), (h2, False), (p2, True), (p1, True)])
                e = 0.0
                if spin(p1) == spin(h1) and spin(p2) == spin(h2):
                    e += g[spat(p1), spat(h1), spat(p2), spat(h2)]
                if spin(p1) == spin(h2) and spin(p2) == spin(h1):
                    e -= g[spat(p1), spat(h2), spat(p2), spat(h1)]
                val = sign * e
            if val != 0.0:
                rows.append(j)
                cols.append(i)
                vals.append(val)
    dim = len(basis)
    return sp.csr_matrix((vals, (rows, cols)), shape=(dim, dim))


# ---------------------------------------------------------------------------
# spin operators

def build_sz(basis: SectorBasis, frag=None) -> sp.csr_matrix:
    """Diagonal ``S_z`` restricted to a fragment (all orbitals if None)."""
    frag = _as_fragment(frag, basis.norb)
    m = np.uint64(frag.mask)
    sz = 0.5 * (popcount(basis.alpha & m).astype(float) - popcount(basis.beta & m))
    return sp.diags(sz, format="csr")


def build_number(basis: SectorBasis, frag=None) -> sp.csr_matrix:
    """Diagonal electron-count operator on a fragment."""
    frag = _as_fragment(frag, basis.norb)
    return sp.diags(basis.occupations(frag.orbitals).astype(float), format="csr")


def build_spin_ladder(basis: SectorBasis, frag=None, raising: bool = True,
                      target: Optional[SectorBasis] = None):
    """
    ``S+`` (or ``S-``) of a fragment as a sparse map ``basis -> target``.

    ``S+ = sum_{p in frag} a+_{p up} a_{p down}``. When ``target`` is None
    it is the set of all images, returned alongside the matrix as
    ``(matrix, target)``. Images absent from an explicit target are
    dropped.
    """
    frag = _as_fragment(frag, basis.norb)
    spec = basis.spec
    na, nb = (spec.nalpha + 1, spec.nbeta - 1) if raising else (spec.nalpha - 1, spec.nbeta + 1)
    if not (0 <= na <= spec.norb and 0 <= nb <= spec.norb):
        empty_spec = None
        m = sp.csr_matrix((0, len(basis)))
        return m, target if target is not None else empty_spec
    alpha, beta = basis.alpha, basis.beta
    n_alpha = popcount(alpha).astype(np.int64)
    new_a, new_b, cols, phases = [], [], [], []
    for p in frag.orbitals:
        bit = np.uint64(1 << p)
        below = np.uint64((1 << p) - 1)
        has_a = (alpha & bit) != 0
        has_b = (beta & bit) != 0
        if raising:
            mask = has_b & ~has_a
            parity = n_alpha + popcount(beta & below) + popcount(alpha & below)
        else:
            mask = has_a & ~has_b
            parity = popcount(alpha & below) + (n_alpha - 1) + popcount(beta & below)
        idx = np.nonzero(mask)[0]
        new_a.append(alpha[idx] ^ bit)
        new_b.append(beta[idx] ^ bit)
        cols.append(idx)
        phases.append(1.0 - 2.0 * (parity[idx] & 1))
    new_a = np.concatenate(new_a) if new_a else np.zeros(0, np.uint64)
    new_b = np.concatenate(new_b) if new_b else np.zeros(0, np.uint64)
    cols = np.concatenate(cols) if cols else np.zeros(0, np.int64)
    phases = np.concatenate(phases) if phases else np.zeros(0)
    if target is None:
        tspec = SectorSpec(spec.norb, na, nb)
        keys = np.unique((new_a << np.uint64(spec.norb)) | new_b)
        ua = keys >> np.uint64(spec.norb)
        ub = keys & np.uint64((1 << spec.norb) - 1)
        target = SectorBasis(tspec, ua, ub, restricted=keys.size != tspec.full_dim)
    rows = target.lookup(new_a, new_b)
    keep = rows >= 0
    m = sp.coo_matrix((phases[keep], (rows[keep], cols[keep])),
                      shape=(len(target), len(basis))).tocsr()
    m.sum_duplicates()
    m.sort_indices()
    return m, target


def build_local_s2(basis: SectorBasis, frag) -> sp.csr_matrix:
    """``S^2`` of a fragment: ``S- S+ + Sz (Sz + 1)`` with sums over ``frag``."""
    frag = _as_fragment(frag, basis.norb)
    sz = build_sz(basis, frag)
    splus, _ = build_spin_ladder(basis, frag, raising=True)
    m = (splus.T @ splus).tocsr() + sz @ sz + sz
    return _finalize(m, "S^2")


def build_total_s2(basis: SectorBasis) -> sp.csr_matrix:
    return build_local_s2(basis, None)


def build_spin_dot(basis: SectorBasis, frag_a, frag_b) -> sp.csr_matrix:
    """``S_A . S_B`` for two disjoint fragments."""
    a = _as_fragment(frag_a, basis.norb)
    b = _as_fragment(frag_b, basis.norb)
    if set(a.orbitals) & set(b.orbitals):
        raise ParameterError("fragments must be disjoint")
    lower_b, mid = build_spin_ladder(basis, b, raising=False)
    if mid is None or len(mid) == 0:
        flip = sp.csr_matrix((len(basis), len(basis)))
    else:
        raise_a, _ = build_spin_ladder(mid, a, raising=True, target=basis)
        flip = (raise_a @ lower_b).tocsr()
    m = 0.5 * (flip + flip.T) + build_sz(basis, a) @ build_sz(basis, b)
    return _finalize(m.tocsr(), "S_A.S_B")


def commutator_norm(a, b, nvec: int = 10, seed: int = 0) -> float:
    """Largest ``||(AB - BA) v||`` over random unit vectors ``v``."""
    rng = np.random.default_rng(seed)
    v = rng.normal(size=(a.shape[0], nvec))
    v /= np.linalg.norm(v, axis=0)
    c = a @ (b @ v) - b @ (a @ v)
    return float(np.linalg.norm(c, axis=0).max()) if nvec else 0.0
