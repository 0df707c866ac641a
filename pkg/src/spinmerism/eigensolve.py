"""Diagonalization of sparse symmetric operators and spin labeling."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components

from .errors import ConvergenceError, ParameterError, SpinLabelError
from .secondq import commutator_norm

__all__ = [
    "DEGENERACY_TOL",
    "SPIN_TOL",
    "DENSE_MAX",
    "Spectrum",
    "diagonalize",
    "assign_spin",
    "group_degenerate",
    "spin_from_s2",
]

DEGENERACY_TOL = 1e-8   # hartree
SPIN_TOL = 1e-6         # on <S^2>
DENSE_MAX = 4000
START_SEED = 20230101


@dataclass(frozen=True)
class Spectrum:
    """Ascending eigenvalues (hartree) with orthonormal eigenvector columns."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    spins: Optional[np.ndarray] = None
    sz: Optional[float] = None

    def __len__(self):
        return self.eigenvalues.size

    @property
    def multiplicities(self) -> np.ndarray:
        if self.spins is None:
            raise SpinLabelError("spectrum has no spin labels; call assign_spin first")
        return np.rint(2 * self.spins).astype(int) + 1

    def select(self, idx) -> "Spectrum":
        idx = np.atleast_1d(np.asarray(idx))
        spins = None if self.spins is None else self.spins[idx]
        return Spectrum(self.eigenvalues[idx], self.eigenvectors[:, idx], spins, self.sz)

    def lowest_of_spin(self, s: float) -> int:
        """Index of the lowest state with total spin ``s``; -1 if absent."""
        hits = np.nonzero(np.isclose(self.spins, s))[0]
        return int(hits[0]) if hits.size else -1


def group_degenerate(values: Sequence[float], tol: float = DEGENERACY_TOL) -> list:
    """Split ascending ``values`` into maximal runs with consecutive gaps < tol."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return []
    if np.any(np.diff(values) < -tol):
        raise ParameterError("values must be ascending")
    cuts = np.nonzero(np.diff(values) >= tol)[0] + 1
    return [list(range(a, b)) for a, b in zip(np.r_[0, cuts], np.r_[cuts, values.size])]


def _blocks(op) -> list:
    n = op.shape[0]
    ncomp, labels = connected_components(op, directed=False)
    if ncomp == 1:
        return [np.arange(n)]
    order = np.argsort(labels, kind="stable")
    bounds = np.searchsorted(labels[order], np.arange(ncomp + 1))
    return [order[bounds[c]:bounds[c + 1]] for c in range(ncomp)]


def _dense_eigh(op, k):
    n = op.shape[0]
    vals, vecs = [], []
    for idx in _blocks(op):
        sub = op[idx][:, idx].toarray() if sp.issparse(op) else op[np.ix_(idx, idx)]
        w, v = np.linalg.eigh(sub)
        full = np.zeros((n, idx.size))
        full[idx] = v
        vals.append(w)
        vecs.append(full)
    vals = np.concatenate(vals)
    vecs = np.hstack(vecs)
    order = np.argsort(vals, kind="stable")[:k]
    return vals[order], vecs[:, order]


def _residuals(op, vals, vecs):
    r = op @ vecs - vecs * vals
    return np.linalg.norm(r, axis=0) / np.maximum(1.0, np.abs(vals))


def diagonalize(op, k: Optional[int] = None, dense_max: int = DENSE_MAX,
                maxiter: Optional[int] = None, seed: int = START_SEED) -> Spectrum:
    """
    Lowest ``k`` eigenpairs of a symmetric sparse matrix (all if k is None).

    Disconnected blocks are diagonalized separately. The dense LAPACK path
    is used up to ``dense_max`` rows or whenever all pairs are requested;
    above it, implicitly restarted Lanczos (ARPACK) with a fixed start
    vector. Raises ConvergenceError if the residual contract is violated.
    """
    op = sp.csr_matrix(op)
    n = op.shape[0]
    if op.shape != (n, n):
        raise ParameterError("operator must be square")
    k = n if k is None else min(int(k), n)
    if k <= 0:
        return Spectrum(np.zeros(0), np.zeros((n, 0)))
    if n <= dense_max or k >= n - 1:
        vals, vecs = _dense_eigh(op, k)
    else:
        rng = np.random.default_rng(seed)
        v0 = rng.normal(size=n)
        ncv = min(n, max(2 * k + 1, k + 20))
        try:
            vals, vecs = spla.eigsh(op, k=k, which="SA", v0=v0, ncv=ncv,
                                    maxiter=maxiter, tol=1e-12)
        except spla.ArpackNoConvergence as exc:
            res = _residuals(op, exc.eigenvalues, exc.eigenvectors) if exc.eigenvalues.size else [np.inf]
            raise ConvergenceError(
                f"Lanczos did not converge: {exc.eigenvalues.size}/{k} pairs, "
                f"best residual {np.min(res):.3e}", float(np.min(res))) from None
        order = np.argsort(vals, kind="stable")
        vals, vecs = vals[order], vecs[:, order]
    res = _residuals(op, vals, vecs)
    if res.size and res.max() > 1e-9:
        raise ConvergenceError(f"eigenpair residual {res.max():.3e} exceeds 1e-9",
                               float(res.max()))
    return Spectrum(vals, vecs)


def spin_from_s2(value: float) -> float:
    """Nearest half-integer S with S(S+1) close to ``value``."""
    s = 0.5 * (np.sqrt(1.0 + 4.0 * max(value, 0.0)) - 1.0)
    return np.rint(2 * s) / 2


def assign_spin(spec: Spectrum, s2, tol: float = SPIN_TOL,
                degeneracy_tol: float = DEGENERACY_TOL, sz: Optional[float] = None,
                op=None) -> Spectrum:
    """
    Label each eigenvector with total spin S from ``<v|S^2|v>``.

    Degenerate groups holding a spin-contaminated vector are rotated to
    diagonalize ``S^2`` inside the group before labeling. If ``op`` is
    given, ``[op, S^2] = 0`` is checked on random vectors first.
    """
    if op is not None:
        scale = max(1.0, abs(op).max(), abs(s2).max())
        c = commutator_norm(op, s2, nvec=4)
        if c > 1e-8 * scale:
            raise SpinLabelError(f"S^2 does not commute with the operator ({c:.2e})")
    vecs = np.array(spec.eigenvectors, copy=True)
    s2v = s2 @ vecs
    expect = np.einsum("ij,ij->j", vecs, s2v)
    spins = np.array([spin_from_s2(x) for x in expect])
    bad = np.abs(expect - spins * (spins + 1)) > tol
    if bad.any():
        for group in group_degenerate(spec.eigenvalues, degeneracy_tol):
            if not bad[group].any():
                continue
            vg = vecs[:, group]
            sub = vg.T @ (s2 @ vg)
            leak = np.linalg.norm(s2 @ vg - vg @ sub)
            if leak > 1e-6:
                raise SpinLabelError(
                    f"S^2 does not leave degenerate group {group[0]}..{group[-1]} "
                    f"invariant (leak {leak:.2e}); broken commutation or incomplete group")
            w, rot = np.linalg.eigh((sub + sub.T) / 2)
            vecs[:, group] = vg @ rot
            expect[group] = w
        spins = np.array([spin_from_s2(x) for x in expect])
        bad = np.abs(expect - spins * (spins + 1)) > tol
        if bad.any():
            i = int(np.nonzero(bad)[0][0])
            raise SpinLabelError(f"state {i}: <S^2> = {expect[i]:.8f} is not S(S+1) within {tol}")
    if sz is None:
        sz = spec.sz
    if sz is not None:
        if np.any(spins < abs(sz) - 1e-9) or np.any(np.abs((spins - sz) % 1) > 1e-9):
            raise SpinLabelError(f"spin labels inconsistent with Sz = {sz}")
    return replace(spec, eigenvectors=vecs, spins=spins, sz=sz)
