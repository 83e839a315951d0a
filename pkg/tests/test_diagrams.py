import math

import pytest

from jlmdiag import (
    PRESETS,
    EliminationPolicy,
    ResourceError,
    build_preset,
    classify,
    combinatorial_bound,
    enumerate_order_n,
    render_diagram,
)
from jlmdiag.algebra import hermitian_conjugate


def test_rabi_first_order_three_classes(rabi):
    classes = enumerate_order_n(rabi, 1)
    assert len(classes) == 3
    assert all(d.closed_loop for d in classes)


def test_jc_single_class(jc):
    for n in (1, 2, 3):
        assert len(enumerate_order_n(jc, n)) == 1


def test_rabi_second_order_six_classes(rabi):
    assert len(enumerate_order_n(rabi, 2)) == 6


def test_bound_values():
    assert combinatorial_bound(4, 1) == {"operators": 40, "diagrams": 10, "first_order_tight": 3}
    assert combinatorial_bound(4, 2)["second_order_tight"] == 6
    with pytest.raises(ValueError):
        combinatorial_bound(3, 1)


@pytest.mark.parametrize("name", PRESETS)
def test_counts_within_bounds(name):
    m = build_preset(name)
    for n in (1, 2, 3):
        classes = enumerate_order_n(m, n)
        b = combinatorial_bound(m.M, n)
        assert len(classes) <= b["diagrams"]
        assert sum(len(d.strings) for d in classes) <= b["operators"]
        tight = b.get("first_order_tight", b.get("second_order_tight"))
        if tight is not None:
            assert len(classes) <= tight


@pytest.mark.parametrize("name", ["rabi", "tavis_cummings", "three_level_v"])
def test_class_structure(name):
    m = build_preset(name)
    for n in (1, 2):
        seen = set()
        for d in enumerate_order_n(m, n):
            ops = [s.ops for s in d.strings]
            assert len(set(ops)) == len(ops)
            assert not (seen & set(ops))
            seen |= set(ops)
            if d.cyclic_members:
                assert d.closed_loop
                assert len(d.cyclic_members) <= n + 1
            # the class is closed under conjugation
            for s in d.strings:
                assert hermitian_conjugate(s).ops in set(ops)
            assert d.multiplicity_m <= n + 1


def test_cyclic_members_are_rotations(rabi):
    for d in enumerate_order_n(rabi, 1):
        if d.closed_loop:
            rots = {d.canonical.ops[k:] + d.canonical.ops[:k] for k in range(2)}
            assert {s.ops for s in d.cyclic_members} <= rots


def test_resource_limit(rabi):
    with pytest.raises(ResourceError):
        enumerate_order_n(rabi, 2, max_classes=2)


def test_classify(jc):
    d = enumerate_order_n(jc, 1)[0]
    tc = classify(d, EliminationPolicy())
    assert tc.retained and tc.kind == "energy_renormalization"
    open_ = enumerate_order_n(jc, 0)[0]
    assert classify(open_, EliminationPolicy()).kind == "off_resonant"
    assert classify(open_, EliminationPolicy(T=0.1)).kind == "resonant"


def test_render_text_and_dot(rabi):
    d = enumerate_order_n(rabi, 1)[0]
    text = render_diagram(d, "text")
    assert "axis" in text and "loop" in text
    dot = render_diagram(d, "dot")
    assert dot.startswith("digraph") and "detuning=" in dot
    with pytest.raises(ValueError):
        render_diagram(d, "svg")


def test_repeated_constituent_gets_extra_arrowheads(jc):
    # a a+ a  at n=2 has no consecutive repeats; n=1 self loop neither, so build one
    d = enumerate_order_n(jc, 2)[0]
    assert render_diagram(d, "dot").count("arrowhead=") == 3


def test_ids_stable(tc):
    a = [d.id for d in enumerate_order_n(tc, 2)]
    b = [d.id for d in enumerate_order_n(tc, 2)]
    assert a == b
