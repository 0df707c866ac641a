import numpy as np
import pytest
from hypothesis import given, strategies as st

from oracles import d2_terms_by_sum_rule
from spinmerism.errors import ParameterError
from spinmerism.fockspace import SectorSpec, build_sector_basis
from spinmerism.ligandfield import (EG, FE2_DEFAULT, T2G, CrystalField, RacahParameters,
                                    crystal_field_oh, d_coulomb_integrals, d_shell_integrals,
                                    find_crossings, gaunt, real_d_transform, slater_from_racah,
                                    tanabe_sugano, three_j, ts_levels)
from spinmerism.eigensolve import assign_spin, diagonalize
from spinmerism.secondq import build_hamiltonian, build_total_s2
from spinmerism.units import to_cm1


def test_three_j_known_values():
    assert three_j(1, 1, 0, 0, 0, 0) == pytest.approx(-1 / np.sqrt(3))
    assert three_j(2, 2, 0, 1, -1, 0) == pytest.approx(-1 / np.sqrt(5))
    assert three_j(1, 1, 2, 1, 1, -2) == pytest.approx(1 / np.sqrt(5))


def test_gaunt_equals_condon_shortley_table():
    # c^2(2,2) = -2/7, c^4(2,2) = 1/21, c^4(2,-2) = sqrt(70)/21 up to sign
    assert gaunt(2, 2, 2, 2, 2) == pytest.approx(-2 / 7)
    assert gaunt(4, 2, 2, 2, 2) == pytest.approx(1 / 21)
    assert abs(gaunt(4, 2, 2, 2, -2)) == pytest.approx(np.sqrt(70) / 21)


def test_slater_from_racah():
    F0, F2, F4 = slater_from_racah(RacahParameters(B=1000.0, C=3500.0, A=0.0))
    assert F4 == pytest.approx(441 * 100.0)
    assert F2 == pytest.approx(49 * (1000.0 + 500.0))
    assert F0 == pytest.approx(49 * 100.0)


def test_real_transform_is_unitary():
    u = real_d_transform()
    assert np.allclose(u.conj().T @ u, np.eye(5))


def test_crystal_field_barycenter():
    h = crystal_field_oh(CrystalField(1000.0))
    assert np.trace(h) == pytest.approx(0.0, abs=1e-15)
    assert to_cm1(h[EG[0], EG[0]]) == pytest.approx(6000.0)
    assert to_cm1(h[T2G[0], T2G[0]]) == pytest.approx(-4000.0)


@pytest.mark.parametrize("kwargs", [dict(B=-1, C=1), dict(B=1, C=-1), dict(B=float("nan"), C=1)])
def test_racah_validation(kwargs):
    with pytest.raises(ParameterError):
        RacahParameters(**kwargs)


@given(st.floats(300, 1500), st.floats(2.0, 7.0))
def test_d2_free_ion_terms(B, ratio):
    C = ratio * B
    basis = build_sector_basis(SectorSpec(5, 1, 1))
    spec = assign_spin(diagonalize(build_hamiltonian(basis, d_coulomb_integrals(RacahParameters(B, C)))),
                       build_total_s2(basis))
    e = to_cm1(spec.eigenvalues)
    trip = np.sort(e[spec.spins == 1.0])
    trip = trip[np.r_[True, np.diff(trip) > 1e-6]]    # one energy per term
    e3F, e3P, e1D = d2_terms_by_sum_rule(B, C)
    assert trip[1] - trip[0] == pytest.approx(e3P - e3F, rel=1e-9)
    assert e[spec.lowest_of_spin(0.0)] - trip[0] == pytest.approx(e1D - e3F, rel=1e-9)


def test_free_ion_term_degeneracies_d2():
    """3F(21) 1D(5) 3P(9) 1G(9) 1S(1) in order of energy for C = 4.5 B."""
    lv = ts_levels(2, FE2_DEFAULT, 0.0)
    assert [(l.multiplicity, l.degeneracy) for l in lv] == [(3, 21), (1, 5), (3, 9), (1, 9), (1, 1)]


def test_d6_ground_state_high_spin_at_zero_field():
    lv = ts_levels(6, FE2_DEFAULT, 0.0)
    assert (lv[0].multiplicity, lv[0].degeneracy) == (5, 25)


def test_d1_splitting_is_10dq():
    lv = ts_levels(1, FE2_DEFAULT, 2.0)
    assert [l.degeneracy for l in lv] == [6, 4]
    assert lv[1].energy == pytest.approx(20.0)


def test_tanabe_sugano_d6_crossover():
    ts = tanabe_sugano(6, FE2_DEFAULT, np.linspace(0, 3, 31))
    sco = [c for c in ts.crossings if c.kind == "spin-crossover"]
    assert len(sco) == 1 and tuple(sco[0].labels) == (5, 1)
    assert 1.5 < sco[0].dq_over_b < 2.3
    lo, hi = sco[0].bracket
    assert lo <= sco[0].dq_over_b <= hi
    # ground level is re-zeroed everywhere
    assert np.allclose(np.min([c.energies for c in ts.curves], axis=0), 0.0, atol=1e-9)


def test_tanabe_sugano_rejects_unsorted_grid():
    with pytest.raises(ParameterError):
        tanabe_sugano(2, FE2_DEFAULT, [0.0, 1.0, 0.5])


def test_find_crossings_needs_labels():
    ts = tanabe_sugano(2, FE2_DEFAULT, np.linspace(0, 1, 3), crossings=False)
    with pytest.raises(ParameterError):
        find_crossings(ts, "excited")


def test_table_first_column_is_grid():
    xs = np.linspace(0, 1, 5)
    header, rows = tanabe_sugano(3, FE2_DEFAULT, xs, crossings=False).table()
    assert header[0] == "dq_over_b"
    assert [r[0] for r in rows] == pytest.approx(xs.tolist())


def test_energies_scale_linearly_with_b():
    """E/B depends only on C/B and Dq/B."""
    a = ts_levels(4, RacahParameters(800.0, 3600.0), 1.3)
    b = ts_levels(4, RacahParameters(1200.0, 5400.0), 1.3)
    assert [l.energy for l in a] == pytest.approx([l.energy for l in b], abs=1e-9)


def test_d_shell_integrals_shape():
    ints = d_shell_integrals(FE2_DEFAULT, 1000.0)
    assert ints.norb == 5
