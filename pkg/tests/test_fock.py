import numpy as np
import pytest

from jlmdiag import FockBasis, FockTruncation, TruncationError, build_preset


def test_basis_order_and_dimension(jc):
    b = FockBasis(jc, FockTruncation(3))
    assert b.dim == 8
    assert b.index(0, (0,)) == 0
    assert b.index(1, (0,)) == 4


def test_ladder_elements(jc):
    b = FockBasis(jc, FockTruncation(4))
    a = b.operator(0, 0, ((0, 0, 1),))
    assert a[b.index(0, (2,)), b.index(0, (3,))] == pytest.approx(np.sqrt(3))
    adag = b.operator(0, 0, ((0, 1, 0),))
    assert np.allclose(adag, a.conj().T)


def test_max_total_restricts_configs():
    m = build_preset("tavis_cummings", N=2)
    b = FockBasis(m, FockTruncation(3, max_total=1))
    assert b.configs == [(0,), (1,)]


def test_budget():
    m = build_preset("dicke", N=2)
    with pytest.raises(TruncationError, match="budget"):
        FockBasis(m, FockTruncation(50, budget=100))


def test_widened():
    t = FockTruncation((2, 3), max_total=3).widened(4)
    assert t.n_max == (6, 7) and t.max_total == 7
