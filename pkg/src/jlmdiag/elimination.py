"""Time-averaged adiabatic elimination and effective-Hamiltonian assembly.

A weight term ``amp e^{-i osc t}`` survives the time average over ``T`` when
``|osc| T < kappa``.  Assembly runs every order ``0..n``: enumerate classes,
weigh each string in the regulator-free limit, normal order its bosonic part,
project, and merge terms that share matter element and monomial.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .algebra import NormalPolynomial, TransitionString, hermitian_conjugate, monomial_factors, normal_order
from .diagrams import enumerate_order_n
from .fock import FockBasis, FockTruncation
from .model import InteractionModel
from .weights import WeightFunction, WeightTerm, total_weight

__all__ = [
    "EliminationPolicy",
    "DroppedTerm",
    "EffectiveTerm",
    "EffectiveHamiltonian",
    "project",
    "assemble_effective",
    "operator_detuning",
    "pv_integral",
    "sokhotski_split",
    "continuum_mediated",
    "resonance_fraction",
]


@dataclass(frozen=True)
class EliminationPolicy:
    T: float = 1000.0
    kappa: float = 0.1
    eps_deg: float | None = None
    drop_renormalization: bool = True
    pv_window: float | None = None
    theta_default: float | None = None

    def __post_init__(self):
        if not (self.T > 0) or not math.isfinite(self.T):
            raise ValueError("policy.T must be > 0")
        if not (self.kappa > 0):
            raise ValueError("policy.kappa must be > 0")
        if self.eps_deg is not None and not (self.eps_deg > 0):
            raise ValueError("policy.eps_deg must be > 0")
        if self.pv_window is not None and not (self.pv_window > 0):
            raise ValueError("policy.pv_window must be > 0")
        if self.theta_default is not None and not (self.theta_default > 0):
            raise ValueError("policy.theta_default must be > 0")

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "kappa": self.kappa,
            "eps_deg": self.eps_deg,
            "drop_renormalization": self.drop_renormalization,
            "pv_window": self.pv_window,
            "theta_default": self.theta_default,
        }


@dataclass(frozen=True)
class DroppedTerm:
    """One eliminated contribution.  ``term`` is None when the whole string was
    skipped before its weight was computed."""

    class_id: str
    ops: tuple[int, ...]
    reason: str  # off_resonant | renormalization | secular
    delta_T: float
    term: WeightTerm | None = None


def project(w: WeightFunction, policy: EliminationPolicy):
    """Split ``w`` into its time-averaged part and the eliminated terms.

    Returns ``(retained, dropped)`` where ``dropped`` is a list of
    ``(term, reason, |osc| T)``.  Decay rates are set to zero first.
    """
    keep, drop = [], []
    for t in w.terms:
        t0 = WeightTerm(t.amp, t.osc, 0.0, t.power, t.intermediate)
        dT = abs(t.osc) * policy.T
        if dT >= policy.kappa:
            drop.append((t0, "off_resonant", dT))
        elif t.power > 0:
            drop.append((t0, "secular", dT))
        elif t.intermediate and policy.drop_renormalization:
            drop.append((t0, "renormalization", dT))
        else:
            keep.append(t0)
    return WeightFunction(keep, merge=False), drop


def operator_detuning(model: InteractionModel, matter, monomial) -> float:
    """Liouvillian eigenvalue of ``|to><from| (x) monomial``."""
    to, fr = matter
    d = -(model.level(to).omega - model.level(fr).omega)
    for mode, p, q in monomial:
        d -= (p - q) * model.modes[mode].omega
    return d


@dataclass
class EffectiveTerm:
    order: int
    matter: tuple[int, int]
    monomial: tuple
    coeff: WeightFunction
    sources: tuple[str, ...]
    model: InteractionModel = field(repr=False)

    @property
    def boson(self) -> NormalPolynomial:
        return NormalPolynomial({self.monomial: 1.0})

    @property
    def diagonal(self) -> bool:
        return self.matter[0] == self.matter[1]

    @property
    def hermitian_pairing(self):
        """``"self"`` or the (matter, monomial) key of the conjugate term."""
        key = ((self.matter[1], self.matter[0]), tuple((m, q, p) for m, p, q in self.monomial))
        return "self" if key == (self.matter, self.monomial) else key

    def constant(self) -> complex:
        return self.coeff.at_zero_frequency(tol=math.inf)

    def matter_label(self) -> str:
        to, fr = self.matter
        return f"|{self.model.level(to).name}><{self.model.level(fr).name}|"

    def boson_label(self) -> str:
        if not self.monomial:
            return "1"
        parts = []
        for mode, dag in monomial_factors(self.monomial):
            parts.append(("a+_" if dag else "a_") + self.model.modes[mode].label)
        return " ".join(parts)


def _fmt(x: float) -> str:
    return repr(float(x))


class EffectiveHamiltonian:
    """Effective Hamiltonian up to a given order.

    Terms live in the interaction picture: each coefficient is a sum of
    ``amp e^{-i osc t}`` pieces.  :meth:`matrix` returns the rotating-frame
    operator at ``t`` or, by default, the static Schrodinger-picture operator
    in which every retained piece contributes ``amp`` times its operator.
    """

    def __init__(self, model, order, policy, terms, dropped_ledger, diagnostics=None):
        self.model = model
        self.order = order
        self.policy = policy
        self.terms: list[EffectiveTerm] = terms
        self.dropped_ledger: list[DroppedTerm] = dropped_ledger
        self.diagnostics: dict = dict(diagnostics or {})

    def __iter__(self):
        return iter(self.terms)

    def __len__(self):
        return len(self.terms)

    def lookup(self, matter, monomial=(), order=None) -> list[EffectiveTerm]:
        return [
            t for t in self.terms
            if t.matter == tuple(matter) and t.monomial == tuple(monomial) and (order is None or t.order == order)
        ]

    def coefficient(self, matter, monomial=(), order=None) -> complex:
        """Static (Schrodinger-picture) coefficient summed over orders."""
        return complex(sum(t.constant() for t in self.lookup(matter, monomial, order)))

    def global_shift(self) -> complex:
        """Mean over levels of the boson-free diagonal coefficient."""
        vals = [self.coefficient((lv.id, lv.id)) for lv in self.model.levels]
        return complex(np.mean(vals))

    def sigma_z_view(self) -> list[tuple[str, complex]]:
        """Diagonal terms of a two-level model as ``c_id * 1 + c_z * sigma_z``.

        Returns ``[(boson label, c_id, c_z), ...]`` merged over orders.
        """
        if len(self.model.levels) != 2:
            raise ValueError("sigma_z view needs a two-level model")
        lo, hi = sorted(self.model.levels, key=lambda lv: lv.omega)
        monos = sorted({t.monomial for t in self.terms if t.diagonal})
        out = []
        for mono in monos:
            ce = self.coefficient((hi.id, hi.id), mono)
            cg = self.coefficient((lo.id, lo.id), mono)
            label = self.lookup((hi.id, hi.id), mono) or self.lookup((lo.id, lo.id), mono)
            out.append((label[0].boson_label(), 0.5 * (ce + cg), 0.5 * (ce - cg)))
        return out

    def matrix(self, trunc: FockTruncation | FockBasis | None = None, t: float = 0.0,
               include_free: bool = True, picture: str = "schrodinger") -> np.ndarray:
        basis = trunc if isinstance(trunc, FockBasis) else FockBasis(self.model, trunc or FockTruncation())
        H = np.zeros((basis.dim, basis.dim), dtype=complex)
        for term in self.terms:
            if picture == "schrodinger":
                d = operator_detuning(self.model, term.matter, term.monomial)
                c = complex(sum(w.amp * np.exp(-1j * (w.osc - d) * t) for w in term.coeff.terms))
            elif picture == "interaction":
                c = complex(term.coeff(t))
            else:
                raise ValueError(f"unknown picture {picture!r}")
            if c != 0:
                basis.add_operator(H, c, term.matter[0], term.matter[1], term.monomial)
        if include_free and picture == "schrodinger":
            H = H + basis.free_hamiltonian()
        return H

    def hermiticity_defect(self, trunc: FockTruncation | None = None, t: float = 0.0) -> float:
        H = self.matrix(trunc, t)
        return float(np.linalg.norm(H - H.conj().T))

    # -- reports -----------------------------------------------------------

    def to_dict(self) -> dict:
        m = self.model
        terms = []
        for term in self.terms:
            terms.append({
                "order": term.order,
                "matter": [m.level(term.matter[0]).name, m.level(term.matter[1]).name],
                "boson_string": term.boson_label(),
                "coeff_terms": [
                    {"amp_re": float(w.amp.real), "amp_im": float(w.amp.imag), "osc": float(w.osc),
                     "decay": float(w.decay), "power": int(w.power)}
                    for w in term.coeff.terms
                ],
                "source_diagram_id": list(term.sources),
            })
        ledger = [
            {"class_id": d.class_id, "string": TransitionString(d.ops, m).label(), "reason": d.reason, "delta_T": float(d.delta_T)}
            for d in self.dropped_ledger
        ]
        return {
            "model": m.name,
            "order": self.order,
            "policy": self.policy.to_dict(),
            "levels": [{"name": lv.name, "omega": lv.omega} for lv in m.levels],
            "modes": [{"label": md.label, "omega": md.omega} for md in m.modes],
            "terms": terms,
            "dropped_ledger": ledger,
            "diagnostics": self.diagnostics,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=False, allow_nan=True) + "\n"

    def to_text(self, tol: float = 0.0) -> str:
        lines = [f"effective Hamiltonian: model {self.model.name}, orders 0..{self.order}, "
                 f"T={_fmt(self.policy.T)}, kappa={_fmt(self.policy.kappa)}"]
        for term in self.terms:
            c = term.constant()
            if abs(c) <= tol:
                continue
            lines.append(f"  [n={term.order}] {term.matter_label()} {term.boson_label()}: "
                         f"{c.real:+.9e}{c.imag:+.9e}j  <- {','.join(term.sources)}")
        if len(self.model.levels) == 2:
            lines.append("  sigma_z form (1, sigma_z coefficients):")
            for label, cid, cz in self.sigma_z_view():
                lines.append(f"    {label}: {cid.real:+.9e} * 1 {cz.real:+.9e} * sigma_z")
        counts: dict[str, int] = {}
        for d in self.dropped_ledger:
            counts[d.reason] = counts.get(d.reason, 0) + 1
        lines.append("  dropped: " + (", ".join(f"{k}={v}" for k, v in sorted(counts.items())) or "none"))
        for k, v in sorted(self.diagnostics.items()):
            lines.append(f"  {k}: {v}")
        return "\n".join(lines) + "\n"


def assemble_effective(model: InteractionModel, n: int, policy: EliminationPolicy | None = None,
                       *, prefilter: bool = True, max_classes: int = 10**6) -> EffectiveHamiltonian:
    """Effective interaction up to order ``n`` (orders 0..n are all included).

    With ``prefilter`` set and renormalization terms dropped, strings whose
    final detuning is off resonant are recorded in the ledger without
    computing their weights; their terms could not survive projection.
    """
    policy = policy or EliminationPolicy()
    if n < 0:
        raise ValueError("order must be >= 0")
    acc: dict[tuple, list] = {}
    ledger: list[DroppedTerm] = []
    for k in range(n + 1):
        for cls in enumerate_order_n(model, k, max_classes=max_classes):
            strings = cls.strings
            if prefilter and policy.drop_renormalization:
                live = []
                for s in strings:
                    dT = abs(s.final_detuning) * policy.T
                    if dT >= policy.kappa:
                        ledger.append(DroppedTerm(cls.id, s.ops, "off_resonant", dT))
                    else:
                        live.append(s)
                if not live:
                    continue
            else:
                live = list(strings)
            weights = _string_weights_for(live, policy)
            for s in live:
                w = weights[s.ops]
                kept, dropped = project(w, policy)
                for term, reason, dT in dropped:
                    ledger.append(DroppedTerm(cls.id, s.ops, reason, dT, term))
                if kept.is_zero:
                    continue
                poly = normal_order(s.boson_string)
                for mono, c in poly:
                    key = (k, s.matter, mono)
                    entry = acc.setdefault(key, [[], set()])
                    entry[0].extend(kept.scaled(c).terms)
                    entry[1].add(cls.id)
    terms = []
    for (k, matter, mono) in sorted(acc, key=lambda x: (x[0], x[1], x[2])):
        raw, srcs = acc[(k, matter, mono)]
        coeff = WeightFunction(raw)
        if coeff.is_zero:
            continue
        terms.append(EffectiveTerm(k, matter, mono, coeff, tuple(sorted(srcs, key=_id_key)), model))
    diagnostics = {}
    if model.continua:
        r = resonance_fraction(model, policy)
        diagnostics["R_T"] = r
        if r > 0.1:
            diagnostics["warning"] = "R_T is not small; continuum resonances are not negligible"
    return EffectiveHamiltonian(model, n, policy, terms, ledger, diagnostics)


def _id_key(cid: str):
    a, b = cid[1:].split("-")
    return (int(a), int(b))


def _string_weights_for(strings, policy):
    """Weights of the given strings, computing each conjugate pair once."""
    out = {}
    present = {s.ops: s for s in strings}
    for s in strings:
        if s.ops in out:
            continue
        w = total_weight(s, policy, limit=True)
        h = hermitian_conjugate(s)
        if h.ops == s.ops:
            out[s.ops] = (w + w.conj()).scaled(0.5)
        else:
            out[s.ops] = w
            if h.ops in present:
                out[h.ops] = w.conj()
    return out


# -- continuum helpers -----------------------------------------------------


def pv_integral(kernel, pole: float, policy: EliminationPolicy | None = None, support=None,
                sokhotski: int = 0) -> complex:
    """Principal value of ``int f(w) / (w - pole) dw`` over ``support``.

    ``kernel`` is a callable ``f`` or a tabulated pair ``(w, f)``; tabulated
    kernels are integrated by the trapezoid rule outside a symmetric window of
    half-width ``policy.pv_window`` around the pole.  ``sokhotski=+1`` adds
    ``+i pi f(pole)`` (the ``1/(w - pole - i0)`` prescription), ``-1``
    subtracts it.
    """
    if callable(kernel):
        if support is None:
            raise ValueError("support is required for a callable kernel")
        lo, hi = map(float, support)
        f = kernel
        if lo < pole < hi:
            val = integrate.quad(lambda w: float(np.real(f(w))), lo, hi, weight="cauchy", wvar=pole,
                                 limit=400, epsabs=1e-13, epsrel=1e-11)[0]
            val_im = integrate.quad(lambda w: float(np.imag(f(w))), lo, hi, weight="cauchy", wvar=pole,
                                    limit=400, epsabs=1e-13, epsrel=1e-11)[0]
            pv = complex(val, val_im)
        else:
            re = integrate.quad(lambda w: float(np.real(f(w))) / (w - pole), lo, hi, limit=400,
                                epsabs=1e-13, epsrel=1e-11)[0]
            im = integrate.quad(lambda w: float(np.imag(f(w))) / (w - pole), lo, hi, limit=400,
                                epsabs=1e-13, epsrel=1e-11)[0]
            pv = complex(re, im)
        inside = lo <= pole <= hi
        fp = complex(f(pole)) if inside else 0.0
    else:
        w, fv = (np.asarray(a) for a in kernel)
        if w.ndim != 1 or w.shape != fv.shape or len(w) < 2:
            raise ValueError("tabulated kernel needs matching 1-d arrays")
        if policy is None or policy.pv_window is None:
            raise ValueError("tabulated kernel needs policy.pv_window")
        h = policy.pv_window
        spacing = float(np.min(np.diff(w)))
        if np.any(np.isclose(w, pole, rtol=0, atol=1e-12 * max(1.0, abs(pole)))) and h < spacing:
            raise ValueError("pole sits on a grid node and pv_window is smaller than the grid spacing")
        mask = np.abs(w - pole) >= h
        g = np.where(mask, fv / np.where(mask, w - pole, 1.0), 0.0)
        pv = complex(_masked_trapezoid(w, g, mask))
        inside = w[0] <= pole <= w[-1]
        fp = complex(np.interp(pole, w, fv.real) + 1j * np.interp(pole, w, fv.imag)) if inside else 0.0
    return pv + sokhotski * 1j * math.pi * fp


def _masked_trapezoid(w, g, mask):
    total = 0.0
    for a in range(len(w) - 1):
        if mask[a] and mask[a + 1]:
            total += 0.5 * (g[a] + g[a + 1]) * (w[a + 1] - w[a])
    return total


def sokhotski_split(f, slope: float, offset: float, support):
    """``int f(w) / (slope*w + offset - i0) dw`` as ``(principal value, i pi part)``."""
    pole = -offset / slope
    pv = pv_integral(lambda w: f(w) / slope, pole, support=support)
    lo, hi = support
    ipi = 1j * math.pi * complex(f(pole)) / abs(slope) if lo <= pole <= hi else 0j
    return pv, ipi


@dataclass(frozen=True)
class MediatedIntegral:
    value: complex
    principal: complex
    ipi_terms: tuple[complex, complex]

    @property
    def ipi_residual(self) -> complex:
        return self.ipi_terms[0] + self.ipi_terms[1]


def continuum_mediated(kernel, support, d_i: tuple[float, float], d_j: tuple[float, float]) -> MediatedIntegral:
    """Continuum limit of ``sum_k f(w_k) w_k (1/d_i(w_k) - 1/d_j(w_k)) / 2``.

    ``kernel`` is ``f(w)`` (for instance ``g_a(w) g_b(w)``); ``d_i`` and ``d_j``
    are ``(slope, offset)`` of the two linear detunings, each regularized as
    ``d - i0``.
    """
    pv_i, ip_i = sokhotski_split(kernel, d_i[0], d_i[1], support)
    pv_j, ip_j = sokhotski_split(kernel, d_j[0], d_j[1], support)
    principal = 0.5 * (pv_i - pv_j)
    ipi = (0.5 * ip_i, -0.5 * ip_j)
    return MediatedIntegral(principal + ipi[0] + ipi[1], principal, ipi)


def _family_transition_detuning(model, fam, low, high):
    # absorption low -> high: delta(w) = w - (w_high - w_low)
    return 1.0, -(model.level(high).omega - model.level(low).omega)


def resonance_fraction(model: InteractionModel, policy: EliminationPolicy | None = None) -> float:
    """Ratio of resonant to off-resonant coupling weight over all continua.

    The resonant region of each continuum transition is ``|delta(w)| T < kappa``.
    """
    policy = policy or EliminationPolicy()
    if not model.continua:
        raise ValueError("model has no continuum")
    res = off = 0.0
    for fam in model.continua:
        lo, hi = map(float, fam.support)
        g2 = lambda w, env=fam.envelope: float(np.abs(env(w)) ** 2)  # noqa: E731
        total = integrate.quad(g2, lo, hi, limit=400, epsabs=0, epsrel=1e-12)[0]
        for low, high in fam.transitions:
            slope, offset = _family_transition_detuning(model, fam, low, high)
            center = -offset / slope
            half = policy.kappa / (policy.T * abs(slope))
            a, b = max(lo, center - half), min(hi, center + half)
            r = integrate.quad(g2, a, b, limit=200, epsabs=0, epsrel=1e-12)[0] if b > a else 0.0
            res += r
            off += total - r
    out = res / off if off > 0 else math.inf
    if out > 0.1:
        warnings.warn(f"R_T = {out:.3g} is not small; resonant continuum modes are significant",
                      RuntimeWarning, stacklevel=2)
    return out
