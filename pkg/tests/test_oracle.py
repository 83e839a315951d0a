import dataclasses
import math

import numpy as np
import pytest

from jlmdiag import (
    EliminationPolicy,
    FockBasis,
    FockTruncation,
    assemble_effective,
    build_preset,
    compare_effective_vs_exact,
    dressed_spectrum,
    fock_hamiltonian,
    propagate,
)
from jlmdiag.model import InteractionModel
from jlmdiag.oracle import flop_frequency, pair_splitting


def test_free_hamiltonian_when_uncoupled():
    m = build_preset("rabi", g=0.0)
    b = FockBasis(m, FockTruncation(3))
    H = fock_hamiltonian(m, b)
    assert np.allclose(H, np.diag(np.diag(H)))
    assert H[b.index(1, (2,)), b.index(1, (2,))] == pytest.approx(1.0 + 2 * 0.8)


def test_jc_block_and_hermiticity(jc):
    b = FockBasis(jc, FockTruncation(6))
    H = fock_hamiltonian(jc, b)
    assert np.linalg.norm(H - H.conj().T) < 1e-14
    for n in range(5):
        assert H[b.index(1, (n,)), b.index(0, (n + 1,))] == pytest.approx(0.02 * math.sqrt(n + 1))


def test_jc_doublet_splitting(jc):
    b = FockBasis(jc, FockTruncation(8))
    H = fock_hamiltonian(jc, b)
    d = 0.2
    for n in range(4):
        i, j = b.index(1, (n,)), b.index(0, (n + 1,))
        assert pair_splitting(H, i, j) == pytest.approx(math.sqrt(d**2 + 4 * 0.02**2 * (n + 1)), rel=1e-12)


def test_spectrum_free_limit_and_errors():
    m = build_preset("jc", g=0.0)
    b = FockBasis(m, FockTruncation(2))
    assert np.allclose(dressed_spectrum(fock_hamiltonian(m, b)), sorted([0, 0.8, 1.6, 1.0, 1.8, 2.6]))
    with pytest.raises(ValueError, match="Hermitian"):
        dressed_spectrum(np.array([[0, 1], [0, 0]]))


def test_rabi_bloch_siegert_in_exact_ground_shift():
    # ground-state shift over g^2 tends to -1/(w_e + w_c)
    gs = np.array([0.002, 0.004, 0.008])
    shifts = []
    for g in gs:
        m = build_preset("rabi", g=g)
        shifts.append(dressed_spectrum(fock_hamiltonian(m, FockTruncation(4)))[0])
    c = np.polyfit(gs**2, shifts, 2)
    assert c[1] == pytest.approx(-1 / 1.8, rel=1e-4)


def test_propagate_basics(jc):
    b = FockBasis(jc, FockTruncation(4))
    H = fock_hamiltonian(jc, b)
    psi = b.state(1, (2,))
    assert np.allclose(propagate(H, psi, 0.0), psi)
    out = propagate(H, psi, 37.0)
    assert abs(np.linalg.norm(out) - 1) < 1e-10
    N = b.number_operator() + np.diag([1.0 if lid == 1 else 0.0 for lid in b.level_ids for _ in b.configs])
    assert np.vdot(out, N @ out).real == pytest.approx(3.0, abs=1e-12)
    with pytest.raises(ValueError, match="normalized"):
        propagate(H, 2 * psi, 1.0)


def test_relabeling_invariance(rabi):
    ref = dressed_spectrum(fock_hamiltonian(rabi, FockTruncation(3)))
    m2 = InteractionModel(tuple(reversed(rabi.levels)), rabi.modes, tuple(reversed(rabi.ops)), name="r")
    assert np.allclose(dressed_spectrum(fock_hamiltonian(m2, FockTruncation(3))), ref, atol=1e-13)


def test_tc_flip_flop_rate(tc):
    b = FockBasis(tc, FockTruncation(2))
    H = fock_hamiltonian(tc, b)
    lv = {l.name: l.id for l in tc.levels}
    i, j = b.index(lv["e1,g2"], (0,)), b.index(lv["g1,e2"], (0,))
    split = pair_splitting(H, i, j)
    # bright state shift (sqrt(d^2 + 8 g^2) - d)/2 against a dark state at zero shift
    assert split == pytest.approx((math.sqrt(0.09 + 8 * 0.02**2) - 0.3) / 2, rel=1e-9)
    # leakage into the one-photon state moves the first maximum slightly
    assert flop_frequency(H, i, j, split) == pytest.approx(split, rel=2e-2)


def test_comparison_zero_coupling():
    for name in ("jc", "tavis_cummings"):
        m = build_preset(name, g=0.0)
        for r in compare_effective_vs_exact(m, EliminationPolicy()):
            assert r.abs_error == 0
            assert r.passed


def test_comparison_reports(tc):
    reports = {r.observable: r for r in compare_effective_vs_exact(tc)}
    ff = reports["flip_flop"]
    assert ff.effective == pytest.approx(2 * 0.02**2 / 0.3)
    # the leading residual is 2 (g/d)^2 relative
    assert ff.rel_error == pytest.approx(2 * (0.02 / 0.3) ** 2, rel=0.05)
    assert ff.params["model"] == "tavis_cummings"
    assert ff.truncation_ok


def test_comparison_unknown_observable(jc):
    with pytest.raises(ValueError, match="unknown observable"):
        compare_effective_vs_exact(jc, observables=["bogus"])
