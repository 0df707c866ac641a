from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import clebsch_gordan_float
from spinmerism.errors import ParameterError
from spinmerism.fockspace import SectorSpec, build_sector_basis
from spinmerism.secondq import Fragment, build_local_s2
from spinmerism.spinproj import (build_projectors, coupled_state_oracle, coupled_weights_oracle,
                                 format_spin, joint_decompose, level_weights, projection_table)
from spinmerism.eigensolve import assign_spin, diagonalize
from spinmerism.secondq import build_hamiltonian, build_total_s2, random_integral_set

halves = st.integers(0, 6).map(lambda k: Fraction(k, 2))


@given(halves, halves, st.data())
def test_oracle_matches_racah_formula(ja, jb, data):
    if ja + jb == 0:
        return
    j = data.draw(st.sampled_from([abs(ja - jb) + k for k in range(int(ja + jb - abs(ja - jb)) + 1)]))
    m = data.draw(st.sampled_from([j - k for k in range(int(2 * j) + 1)]))
    for (ma, mb), c in coupled_state_oracle(ja, jb, j, m).items():
        ref = clebsch_gordan_float(float(ja), float(ma), float(jb), float(mb), float(j), float(m))
        assert np.sign(float(c)) * np.sqrt(float(abs(c))) == pytest.approx(ref, abs=1e-12)


@given(halves, halves, st.data())
def test_oracle_weights_sum_to_one(ja, jb, data):
    j = data.draw(st.sampled_from([abs(ja - jb) + k for k in range(int(ja + jb - abs(ja - jb)) + 1)]))
    assert sum(coupled_weights_oracle(ja, jb, j).values()) == 1


def test_known_clebsch_gordan_weights():
    w = coupled_weights_oracle(2, 1, 2)
    assert w == {(2, 0): Fraction(2, 3), (1, 1): Fraction(1, 3)}


def test_oracle_rejects_triangle_violation():
    with pytest.raises(ParameterError):
        coupled_state_oracle(2, Fraction(1, 2), 1)


class TestProjectors:
    basis = build_sector_basis(SectorSpec(5, 3, 2))
    frag = Fragment((0, 1, 2))

    def test_resolution_of_identity(self):
        ps = build_projectors(self.basis, self.frag)
        total = sum(ps.projector(s) for s in ps.values)
        assert np.allclose(total, np.eye(len(self.basis)), atol=1e-12)

    def test_projectors_are_idempotent_and_orthogonal(self):
        ps = build_projectors(self.basis, self.frag)
        for s in ps.values:
            p = ps.projector(s)
            assert np.allclose(p @ p, p, atol=1e-12)
            for t in ps.values:
                if t != s:
                    assert np.allclose(p @ ps.projector(t), 0, atol=1e-12)

    def test_lazy_projectors_agree_with_dense(self):
        dense = build_projectors(self.basis, self.frag)
        lazy = build_projectors(self.basis, self.frag, dense_max=0)
        v = np.random.default_rng(0).normal(size=(len(self.basis), 3))
        for s in dense.values:
            assert np.allclose(dense.apply(s, v), lazy.apply(s, v), atol=1e-10)

    def test_projected_vectors_are_local_eigenvectors(self):
        ps = build_projectors(self.basis, self.frag)
        s2 = build_local_s2(self.basis, self.frag)
        v = np.random.default_rng(1).normal(size=len(self.basis))
        for s in ps.values:
            pv = ps.apply(s, v[:, None])[:, 0]
            assert np.allclose(s2 @ pv, s * (s + 1) * pv, atol=1e-10)


@given(st.integers(0, 2**31 - 1))
def test_joint_weights_sum_to_one(seed):
    basis = build_sector_basis(SectorSpec(5, 3, 2))
    pa = build_projectors(basis, (0, 1))
    pb = build_projectors(basis, (2, 3, 4))
    v = np.random.default_rng(seed).normal(size=len(basis))
    row = joint_decompose(v / np.linalg.norm(v), pa, pb, nominal=2)
    assert row.total() == pytest.approx(1.0, abs=1e-12)
    assert sum(row.weights_by_count.values()) == pytest.approx(1.0, abs=1e-12)
    assert 0.0 <= row.ct_weight <= 1.0


def test_joint_decompose_requires_normalized_state():
    basis = build_sector_basis(SectorSpec(2, 1, 1))
    pa, pb = build_projectors(basis, (0,)), build_projectors(basis, (1,))
    with pytest.raises(ParameterError):
        joint_decompose(np.ones(len(basis)), pa, pb)


def test_fragments_must_be_disjoint():
    basis = build_sector_basis(SectorSpec(3, 1, 1))
    with pytest.raises(ParameterError):
        joint_decompose(np.eye(len(basis))[0], build_projectors(basis, (0, 1)),
                        build_projectors(basis, (1, 2)))


def test_level_weights_independent_of_basis_choice():
    basis = build_sector_basis(SectorSpec(4, 2, 2))
    pa, pb = build_projectors(basis, (0, 1)), build_projectors(basis, (2, 3))
    h = build_hamiltonian(basis, random_integral_set(4, seed=5))
    spec = assign_spin(diagonalize(h), build_total_s2(basis))
    vecs = spec.eigenvectors[:, :3]
    q, _ = np.linalg.qr(np.random.default_rng(0).normal(size=(3, 3)))
    w1, w2 = level_weights(vecs, pa, pb), level_weights(vecs @ q, pa, pb)
    assert w1.keys() == w2.keys()
    for k in w1:
        assert w1[k] == pytest.approx(w2[k], abs=1e-12)


def test_projection_table_columns_match_records():
    basis = build_sector_basis(SectorSpec(2, 1, 1))
    h = build_hamiltonian(basis, random_integral_set(2, seed=1))
    spec = assign_spin(diagonalize(h), build_total_s2(basis))
    table = projection_table(spec, build_projectors(basis, (0,)), build_projectors(basis, (1,)),
                             nominal=1, names=("X", "Y"))
    cols = table.columns()
    assert cols[0] == "energy_cm1" and cols[-1] == "ct_weight"
    assert "w_X1/2_Y1/2" in cols
    assert all(len(r) == len(cols) for r in table.records())


@pytest.mark.parametrize("s, text", [(0, "0"), (0.5, "1/2"), (1.0, "1"), (2.5, "5/2")])
def test_format_spin(s, text):
    assert format_spin(s) == text
