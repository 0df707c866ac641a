from math import comb

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinmerism.errors import ParameterError
from spinmerism.fockspace import (DOWN, UP, Determinant, SectorBasis, SectorSpec, annihilate,
                                  apply_excitation, build_sector_basis, create,
                                  occupation_strings, parity_block, popcount)


@st.composite
def sectors(draw, max_norb=6):
    norb = draw(st.integers(1, max_norb))
    return SectorSpec(norb, draw(st.integers(0, norb)), draw(st.integers(0, norb)))


@st.composite
def determinants(draw, norb=5):
    return Determinant(draw(st.integers(0, (1 << norb) - 1)), draw(st.integers(0, (1 << norb) - 1)))


class TestSectorBasis:
    @given(sectors())
    def test_dimension_and_order(self, spec):
        basis = build_sector_basis(spec)
        assert len(basis) == comb(spec.norb, spec.nalpha) * comb(spec.norb, spec.nbeta)
        assert np.all(np.diff(basis.keys.astype(object)) > 0) if len(basis) > 1 else True
        assert np.all(popcount(basis.alpha) == spec.nalpha)
        assert np.all(popcount(basis.beta) == spec.nbeta)

    @given(sectors())
    def test_lookup_round_trip(self, spec):
        basis = build_sector_basis(spec)
        assert np.array_equal(basis.lookup(basis.alpha, basis.beta), np.arange(len(basis)))
        for i, d in enumerate(basis):
            assert basis.index[d] == i

    def test_lookup_missing_is_minus_one(self):
        basis = build_sector_basis(SectorSpec(4, 2, 1))
        assert basis.lookup([0b0011], [0b0011]).tolist() == [-1]

    def test_from_dets_rejects_wrong_sector(self):
        with pytest.raises(ParameterError):
            SectorBasis.from_dets(SectorSpec(3, 1, 1), [Determinant(0b011, 0b001)])

    def test_duplicates_rejected(self):
        with pytest.raises(ParameterError):
            SectorBasis.from_dets(SectorSpec(3, 1, 1), [Determinant(1, 1), Determinant(1, 1)])

    @pytest.mark.parametrize("norb, na, nb", [(0, 0, 0), (33, 1, 1), (3, 4, 0), (3, 0, -1)])
    def test_invalid_sector(self, norb, na, nb):
        with pytest.raises(ParameterError):
            SectorSpec(norb, na, nb)

    def test_occupation_strings_small(self):
        assert occupation_strings(3, 2).tolist() == [0b011, 0b101, 0b110]

    def test_to_string(self):
        assert Determinant(0b0101, 0b0011).to_string(4) == "2ba0"


@given(determinants(), st.integers(0, 4), st.integers(0, 1), st.integers(0, 4), st.integers(0, 1))
def test_canonical_anticommutation(det, p, sp_, q, sq):
    """{a_p, a+_q} = delta_pq on every determinant."""
    def apply(ops, d):
        out = {d: 1}
        for kind, orb, spin in reversed(ops):
            nxt = {}
            for dd, c in out.items():
                r = (create if kind == "c" else annihilate)(dd, orb, spin)
                if r is not None:
                    nxt[r[0]] = nxt.get(r[0], 0) + c * r[1]
            out = nxt
        return {k: v for k, v in out.items() if v}

    total = apply([("a", p, sp_), ("c", q, sq)], det)
    for k, v in apply([("c", q, sq), ("a", p, sp_)], det).items():
        total[k] = total.get(k, 0) + v
    total = {k: v for k, v in total.items() if v}
    assert total == ({det: 1} if (p, sp_) == (q, sq) else {})


@given(determinants(), st.integers(0, 4), st.integers(0, 4), st.sampled_from([UP, DOWN]))
def test_excitation_equals_create_annihilate(det, p, q, spin):
    r = apply_excitation(det, p, q, spin)
    a = annihilate(det, q, spin)
    ref = None
    if a is not None:
        c = create(a[0], p, spin)
        if c is not None:
            ref = (c[0], a[1] * c[1])
    assert r == ref


def test_parity_blocks_partition_the_sector():
    basis = build_sector_basis(SectorSpec(5, 3, 2))
    odd = ((2, 3), (2, 4))
    blocks = [parity_block(basis, odd, (i, j)) for i in (0, 1) for j in (0, 1)]
    assert sum(len(b) for b in blocks) == len(basis)
    keys = np.concatenate([b.keys for b in blocks])
    assert np.unique(keys).size == len(basis)
    assert all(b.restricted for b in blocks if len(b) < len(basis))


def test_parity_block_rejects_bad_parity():
    with pytest.raises(ParameterError):
        parity_block(build_sector_basis(SectorSpec(3, 1, 1)), ((0,),), (2,))
