import json
import math
import warnings

import numpy as np
import pytest
from scipy import integrate

from jlmdiag import (
    PRESETS,
    EliminationPolicy,
    FockTruncation,
    GaussianEnvelope,
    WeightFunction,
    WeightTerm,
    assemble_effective,
    build_preset,
    continuum_mediated,
    enumerate_order_n,
    project,
    pv_integral,
    resonance_fraction,
    total_weight,
)
from jlmdiag.oracle import pv_window_extrapolation

G = 0.02


def test_policy_validation():
    with pytest.raises(ValueError, match="policy.T must be > 0"):
        EliminationPolicy(T=-1.0)
    with pytest.raises(ValueError, match="kappa"):
        EliminationPolicy(kappa=0.0)


def test_project_keeps_static_term():
    kept, dropped = project(WeightFunction([WeightTerm(0.3, 0.0)]), EliminationPolicy())
    assert kept.at_zero_frequency() == 0.3 and not dropped


def test_project_jc_stark_weight(jc):
    d = enumerate_order_n(jc, 1)[0]
    pol = EliminationPolicy(T=1000)
    # the string |g><e|a+ |e><g|a: left constant is -|g|^2/(w_e - w_c)
    s = [s for s in d.strings if s.from_level == 0][0]
    kept, dropped = project(total_weight(s, limit=True), pol)
    assert kept.at_zero_frequency() == pytest.approx(-G**2 / 0.2)
    assert [abs(t.osc) for t, _, _ in dropped] == pytest.approx([0.2] * len(dropped))


def test_project_rabi_mixed_vanishes(rabi):
    pol = EliminationPolicy()
    mixed = [d for d in enumerate_order_n(rabi, 1) if abs(d.final_detuning) > 1.0]
    assert mixed
    for d in mixed:
        for s in d.strings:
            kept, _ = project(total_weight(s, limit=True), pol)
            assert kept.is_zero


def test_jc_stark_hamiltonian(jc):
    H = assemble_effective(jc, 1)
    chi = G**2 / 0.2
    view = {label: (cid, cz) for label, cid, cz in H.sigma_z_view()}
    assert view["a+_c a_c"][1] == pytest.approx(chi)
    assert view["a+_c a_c"][0] == pytest.approx(0.0, abs=1e-15)
    # 1/2 (w_e + chi) sigma_z: the interaction part is chi/2, plus a global chi/2
    assert view["1"][1] == pytest.approx(chi / 2)
    assert H.global_shift() == pytest.approx(chi / 2)


def test_rabi_bloch_siegert(rabi):
    H = assemble_effective(rabi, 1)
    sigma = 1.8
    assert H.coefficient((0, 0), ()) == pytest.approx(-G**2 / sigma)
    assert H.coefficient((0, 0), ((0, 1, 1),)) == pytest.approx(-(G**2 / 0.2 + G**2 / sigma))
    jc = assemble_effective(build_preset("jc"), 1)
    assert jc.coefficient((0, 0), ()) == 0


def test_tc_harmonic_average_coupling():
    w1, w2 = 1.0, 1.00001
    m = build_preset("tavis_cummings", omegas=[w1, w2], omega_c=0.7, gs=[0.02, 0.03])
    H = assemble_effective(m, 1, EliminationPolicy(T=1000))
    lv = {l.name: l.id for l in m.levels}
    t = H.lookup((lv["g1,e2"], lv["e1,g2"]))[0]
    expected = 0.5 * 0.02 * 0.03 * (1 / (w1 - 0.7) + 1 / (w2 - 0.7))
    assert t.constant() == pytest.approx(expected, rel=1e-12)
    assert t.coeff.terms[0].osc == pytest.approx(-(w2 - w1) * 1, rel=1e-6) or \
        t.coeff.terms[0].osc == pytest.approx(w2 - w1, rel=1e-6)


def test_dicke_counter_rotating_correction():
    m = build_preset("dicke")
    H = assemble_effective(m, 1)
    lv = {l.name: l.id for l in m.levels}
    J = H.coefficient((lv["g1,e2"], lv["e1,g2"]))
    assert J == pytest.approx(G**2 / 0.3 - G**2 / 1.7)


@pytest.mark.parametrize("name", PRESETS)
def test_hermitian_matrix(name):
    m = build_preset(name)
    for n in (1, 2):
        H = assemble_effective(m, n)
        assert H.hermiticity_defect(FockTruncation(2)) < 1e-12
        assert H.hermiticity_defect(FockTruncation(2), t=3.0) < 1e-12
        keys = {(t.order, t.matter, t.monomial) for t in H.terms}
        for t in H.terms:
            if t.hermitian_pairing != "self":
                assert (t.order, *t.hermitian_pairing) in keys


def test_prefilter_is_exact(rabi):
    pol = EliminationPolicy()
    a = assemble_effective(rabi, 2, pol)
    b = assemble_effective(rabi, 2, pol, prefilter=False)
    assert [(t.order, t.matter, t.monomial) for t in a] == [(t.order, t.matter, t.monomial) for t in b]
    for ta, tb in zip(a, b):
        assert ta.constant() == pytest.approx(tb.constant(), abs=1e-18)
    assert all(d.term is not None for d in b.dropped_ledger)


def test_ledger_partitions_terms(rabi):
    pol = EliminationPolicy(drop_renormalization=False)
    for d in enumerate_order_n(rabi, 2):
        for s in d.strings:
            w = total_weight(s, limit=True)
            kept, dropped = project(w, pol)
            assert len(kept) + len(dropped) == len(w)
            ts = np.array([0.0, 1.3, 7.0])
            rebuilt = kept(ts) + sum(t(ts) for t, _, _ in dropped)
            assert np.allclose(rebuilt, w(ts), atol=1e-15)


def test_vacuum_contraction_gives_half(jc):
    # <e| H |e> photon-independent part equals chi: the +1/2 of (n + 1/2) times 2 chi
    H = assemble_effective(jc, 1)
    chi = G**2 / 0.2
    assert H.coefficient((1, 1), ()) == pytest.approx(chi)


def test_lambda_raman_and_stark_split():
    m = build_preset("three_level_lambda")
    H = assemble_effective(m, 1)
    i, j = m.mode_index("i"), m.mode_index("j")
    raman = H.coefficient((2, 0), ((i, 0, 1), (j, 1, 0)))
    d_i, d_j = 0.8 - 1.0, 0.5 - 0.7
    assert raman == pytest.approx(0.5 * 0.02 * 0.02 * (1 / d_i + 1 / d_j))
    # Stark on alpha: one same-frequency term per mode number operator
    assert H.coefficient((0, 0), ((i, 1, 1),)) == pytest.approx(0.02**2 / d_i)
    assert H.coefficient((0, 0), ((j, 1, 1),)) == 0


def test_report_json_deterministic(tc):
    a = assemble_effective(tc, 2).to_json()
    b = assemble_effective(tc, 2).to_json()
    assert a == b
    doc = json.loads(a)
    assert all(t["source_diagram_id"] for t in doc["terms"])
    assert {"amp_re", "amp_im", "osc", "decay"} <= set(doc["terms"][0]["coeff_terms"][0])


def test_pv_symmetric_cases():
    assert abs(pv_integral(lambda w: 1.0, 1.0, support=(0.0, 2.0))) < 1e-12
    # integrand (w - 1) is odd about the pole
    assert abs(pv_integral(lambda w: (w - 1.0) ** 2, 1.0, support=(0.0, 2.0))) < 1e-12


def test_pv_gaussian_against_window_extrapolation():
    f = GaussianEnvelope(1.0, 0.75, 0.05)
    pole = 0.8
    ref = pv_window_extrapolation(lambda w: float(f(w)), pole, (0.45, 1.05), windows=(0.004, 0.002, 0.001))
    val = pv_integral(lambda w: float(f(w)), pole, support=(0.45, 1.05))
    assert val.real == pytest.approx(ref, rel=1e-6)
    with_ipi = pv_integral(lambda w: float(f(w)), pole, support=(0.45, 1.05), sokhotski=1)
    assert with_ipi.imag == pytest.approx(math.pi * float(f(pole)))


def test_pv_tabulated():
    w = np.linspace(0.0, 2.0, 2001) + 0.0005
    val = pv_integral((w, np.ones_like(w)), 1.0, EliminationPolicy(pv_window=0.01))
    assert abs(val) < 2e-3
    with pytest.raises(ValueError, match="grid"):
        pv_integral((np.linspace(0, 2, 21), np.ones(21)), 1.0, EliminationPolicy(pv_window=0.01))
    with pytest.raises(ValueError, match="pv_window"):
        pv_integral((w, np.ones_like(w)), 1.0)


def test_ipi_cancellation_in_mediated_term():
    f = GaussianEnvelope(1.0, 0.75, 0.05)
    kern = lambda w: float(f(w)) ** 2  # noqa: E731
    # delta_i = w - 1, delta_j = -(w - 1): both poles at w = 1 inside the support
    r = continuum_mediated(kern, (0.45, 1.2), (1.0, -1.0), (-1.0, 1.0))
    assert abs(r.ipi_terms[0]) > 0
    assert abs(r.ipi_residual) < 1e-15
    assert abs(r.value.imag) < 1e-15


def _gauss_model(center, width, support, nodes=40):
    env = GaussianEnvelope(0.05, center, width)
    return build_preset("three_level_v", omega_alpha=1.0, omega_beta=0.0, omega_gamma=1.0, shared_family=True,
                        continuum_i=dict(envelope=env, support=support, nodes=nodes))


def test_resonance_fraction_cases():
    far = _gauss_model(0.5, 0.05, (0.3, 0.7))
    assert resonance_fraction(far, EliminationPolicy()) == 0.0
    near = _gauss_model(1.0, 0.01, (0.95, 1.05))
    with pytest.warns(RuntimeWarning):
        r = resonance_fraction(near, EliminationPolicy(T=1.0))
    assert r > 10
    five = _gauss_model(0.75, 0.05, (0.45, 1.05))
    r5 = resonance_fraction(five, EliminationPolicy())
    # direct quadrature of the two integrals
    g2 = lambda w: float(GaussianEnvelope(0.05, 0.75, 0.05)(w)) ** 2  # noqa: E731
    res = integrate.quad(g2, 1 - 1e-4, 1 + 1e-4)[0]
    off = integrate.quad(g2, 0.45, 1.05)[0] - res
    assert r5 == pytest.approx(res / off, rel=1e-6)
    assert r5 < 1e-4
    with pytest.raises(ValueError, match="no continuum"):
        resonance_fraction(build_preset("jc"))


def test_grid_refinement_mediated_coupling():
    vals = []
    for K in (100, 200):
        m = _gauss_model(0.75, 0.05, (0.45, 1.05), K)
        vals.append(assemble_effective(m, 1).coefficient((2, 0), ()))
    assert abs(vals[1] - vals[0]) < 0.01 * abs(vals[1])


def test_continuum_diagnostics_attached():
    m = _gauss_model(0.75, 0.05, (0.45, 1.05), 20)
    H = assemble_effective(m, 1)
    assert H.diagnostics["R_T"] < 1e-4
