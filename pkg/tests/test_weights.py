import math
import random

import numpy as np
import pytest

from jlmdiag import (
    EliminationPolicy,
    TransitionString,
    WeightFunction,
    WeightTerm,
    build_preset,
    canonical_weight,
    degenerate_limit_weight,
    placements,
    quadrature_weight,
    reverse_weight,
    total_weight,
)
from jlmdiag.algebra import hermitian_conjugate
from jlmdiag.diagrams import enumerate_order_n
from jlmdiag.weights import first_order_closed_form, first_order_projected

from conftest import chain_model, with_theta


def test_chain_model_detunings():
    _, s = chain_model([0.3, -1.2, 2.0])
    assert s.deltas == pytest.approx((0.3, -1.2, 2.0))


def test_placement_count_and_signs():
    for n in range(5):
        pl = placements(n)
        assert len(pl) == 2**n
        assert sum(1 for p in pl if p.perturbed_index == 0) == 1
    assert [p.order for p in placements(1)] == [(0, 1), (1, 0)]
    assert [p.sign for p in placements(1)] == [-1, 1]


def test_zero_order_weight():
    _, s = chain_model([0.7])
    w = canonical_weight(s)
    assert w(2.0) == pytest.approx(np.exp(-1j * 0.7 * 2.0))


def test_weight_vanishes_at_zero_time():
    _, s = chain_model([0.37, -1.21, 2.05])
    for pl in placements(2):
        assert abs(canonical_weight(s, pl)(0.0)) < 1e-12


def test_n1_closed_form():
    _, s = chain_model([0.4, -1.3])
    f = first_order_closed_form(0.4, -1.3)
    ts = np.linspace(0, 20, 9)
    assert np.allclose(total_weight(s, couplings=False, limit=True)(ts), f(ts), atol=1e-13)


def test_n1_cyclic_partner_is_negated():
    m = build_preset("jc")
    d = enumerate_order_n(m, 1)[0]
    a, b = d.cyclic_members[0], d.cyclic_members[1]
    wa = total_weight(a, couplings=False, limit=True)
    wb = total_weight(b, couplings=False, limit=True)
    ts = np.array([0.3, 2.0, 9.0])
    # the oscillating parts swap sign; constants are the projected values
    assert first_order_projected(*a.deltas) == pytest.approx(-first_order_projected(*b.deltas))
    assert wa.at_zero_frequency(1e-12) == pytest.approx(-wb.at_zero_frequency(1e-12))


def test_n2_random_detunings_vs_quadrature():
    _, s = chain_model([0.37, -1.21, 2.05], thetas=[1e-4, 2e-4, 3e-4])
    for pl in placements(2):
        for t in (0.5, 4.0):
            a = canonical_weight(s, pl)(t)
            b = quadrature_weight(s, pl, t)
            assert abs(a - b) <= 1e-8 * abs(b)


def test_quadrature_time_zero_and_steps():
    _, s = chain_model([0.3, 0.9])
    assert quadrature_weight(s, placements(1)[0], 0.0) == 0
    with pytest.raises(ValueError):
        quadrature_weight(s, placements(1)[0], 1.0, steps=32)


def test_n1_quadrature_fixed_steps():
    _, s = chain_model([0.3, 0.9], thetas=[1e-5, 1e-5])
    pl = placements(1)[1]
    b = quadrature_weight(s, pl, 3.0, steps=4096)
    assert abs(canonical_weight(s, pl)(3.0) - b) < 1e-8


def test_limit_matches_regulator_free_quadrature():
    m = build_preset("jc")
    s = enumerate_order_n(m, 2)[0].canonical
    for pl in placements(2):
        for t in (0.7, 6.0):
            a = canonical_weight(s, pl, limit=True)(t)
            b = quadrature_weight(s, pl, t, regulated=False)
            assert abs(a - b) <= 1e-8 * max(abs(b), 1e-12)


def test_secular_term_present_for_degenerate_loop():
    m = build_preset("jc")
    s = enumerate_order_n(m, 2)[0].canonical
    w = total_weight(s, limit=True)
    assert any(t.power == 1 for t in w.terms)


def test_degenerate_limit_groups_reported():
    m = build_preset("jc")
    d = enumerate_order_n(m, 2)[0]
    lw = degenerate_limit_weight(d, EliminationPolicy())
    assert lw.degenerate_groups
    assert all(np.isfinite(lw.weight(np.array([1.0, 50.0]))))


def test_reverse_weight_conjugates():
    m = build_preset("rabi")
    for d in enumerate_order_n(m, 2):
        s = d.canonical
        h = hermitian_conjugate(s)
        ts = np.array([0.4, 3.3])
        assert np.allclose(reverse_weight(s, limit=True)(ts), total_weight(h, limit=True)(ts), atol=1e-14)


def test_weight_scaling_with_coupling():
    m = build_preset("rabi")
    s = enumerate_order_n(m, 1)[0].canonical
    s2 = TransitionString(s.ops, m.scaled(3.0))
    t = 2.5
    assert total_weight(s2, limit=True)(t) == pytest.approx(9.0 * total_weight(s, limit=True)(t), rel=1e-13)


def test_weightfunction_merge_and_conj():
    w = WeightFunction([WeightTerm(1.0, 0.5), WeightTerm(2.0, 0.5), WeightTerm(1j, -0.1)])
    assert len(w) == 2
    c = w.conj()
    assert c(1.3) == pytest.approx(np.conj(w(1.3)))
    assert WeightFunction([WeightTerm(1.0, 0.5), WeightTerm(-1.0, 0.5)]).is_zero
