import numpy as np
import pytest
from hypothesis import given, strategies as st

from spinmerism.analysis import (GAP_TOL, Series, ci_convergence, detect_avoided_crossing,
                                 dominant_spin)
from spinmerism.cispace import CILevel, OrbitalPartition
from spinmerism.errors import ParameterError
from spinmerism.fockspace import SectorSpec
from spinmerism.secondq import random_integral_set


def two_level(x, x0, delta, slope=1.0):
    """Eigenvalues and weights of [[s(x-x0), d], [d, -s(x-x0)]]."""
    out = []
    for xv in np.atleast_1d(x):
        e = slope * (xv - x0)
        m = np.array([[e, delta], [delta, -e]])
        w, v = np.linalg.eigh(m)
        wts = [{(1.0, 0.0): v[0, k] ** 2, (2.0, 0.0): v[1, k] ** 2} for k in range(2)]
        out.append((w[0], w[1], wts[0], wts[1]))
    return out


def series_pair(x, x0, delta):
    pts = two_level(x, x0, delta)
    a = Series(x, [p[0] for p in pts], [p[2] for p in pts], "lo")
    b = Series(x, [p[1] for p in pts], [p[3] for p in pts], "hi")
    return a, b, lambda v: two_level(v, x0, delta)[0]


@given(st.floats(0.2, 0.8), st.floats(0.5, 5.0))
def test_avoided_crossing_gap_recovered(x0, delta):
    x = np.linspace(0, 1, 11) * 10
    a, b, resolve = series_pair(x, 10 * x0, delta)
    rep = detect_avoided_crossing(a, b, resolve=resolve)
    assert rep.kind == "avoided-crossing"
    assert rep.min_gap == pytest.approx(2 * delta, rel=1e-6)
    assert rep.location == pytest.approx(10 * x0, abs=1e-3)
    assert rep.swapped


@given(st.floats(0.15, 0.85))
def test_exact_crossing_located(x0):
    x = np.linspace(0, 10, 21)
    a = Series(x, x - 10 * x0, label="a")
    b = Series(x, -(x - 10 * x0), label="b")
    rep = detect_avoided_crossing(a, b, resolve=lambda v: (v - 10 * x0, -(v - 10 * x0), None, None))
    assert rep.kind == "exact-crossing"
    assert rep.min_gap < 1e-9
    assert rep.location == pytest.approx(10 * x0, abs=1e-8)


def test_minimum_at_grid_edge_is_none():
    x = np.linspace(0, 1, 5)
    rep = detect_avoided_crossing(Series(x, x), Series(x, 2 * x + 1))
    assert rep.kind == "none"


def test_symmetric_in_argument_order():
    x = np.linspace(0, 10, 11)
    a, b, resolve = series_pair(x, 4.3, 1.0)
    r1 = detect_avoided_crossing(a, b, resolve=resolve)
    r2 = detect_avoided_crossing(b, a, resolve=lambda v: resolve(v)[1::-1] + resolve(v)[:1:-1])
    assert r1.min_gap == pytest.approx(r2.min_gap)
    assert r1.location == pytest.approx(r2.location)


def test_refinement_never_worse_than_grid():
    x = np.linspace(0, 10, 6)
    a, b, resolve = series_pair(x, 3.7, 0.4)
    rep = detect_avoided_crossing(a, b, resolve=resolve)
    assert rep.min_gap <= rep.grid_min_gap


def test_series_validation():
    with pytest.raises(ParameterError):
        Series([0, 1], [0])
    x = np.linspace(0, 1, 3)
    with pytest.raises(ParameterError):
        detect_avoided_crossing(Series(x, x), Series(x + 1, x))


def test_dominant_spin():
    assert dominant_spin({(1.0, 1.0): 0.3, (2.0, 1.0): 0.5, (1.0, 0.0): 0.1}) == 2.0


def test_gap_tolerance_is_small():
    assert 0 < GAP_TOL <= 0.01


def test_ci_convergence_report():
    part = OrbitalPartition.from_sizes(1, 2, 1)
    rep = ci_convergence(random_integral_set(4, seed=3), part, SectorSpec(4, 2, 2))
    assert [r.level for r in rep.rows] == [CILevel.CAS, CILevel.CAS_S, CILevel.DDC2,
                                          CILevel.DDCI, CILevel.FCI]
    assert rep.is_variational()
    assert rep.rows[-1].singlet_triplet_cm1 is not None


def test_ci_convergence_skips_large_fci():
    part = OrbitalPartition.from_sizes(1, 2, 1)
    rep = ci_convergence(random_integral_set(4, seed=3), part, SectorSpec(4, 2, 2), fci_max=10)
    assert CILevel.FCI not in [r.level for r in rep.rows]
