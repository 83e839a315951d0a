"""Time-dependent weights of operator strings.

A weight is a finite sum ``sum amp * t^power * exp(-i osc t) * exp(-decay t)``.
For a single application order the weight is a divided difference of
``exp(-i z t)`` over the cumulative nodes ``z_l = Delta_l - i Theta_l``; with
the regulators sent to zero, coincident nodes give the confluent form, which
is where the ``t^power`` terms come from.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .algebra import TransitionString

__all__ = [
    "WeightTerm",
    "WeightFunction",
    "Placement",
    "placements",
    "canonical_weight",
    "total_weight",
    "reverse_weight",
    "degenerate_limit_weight",
    "LimitWeight",
    "first_order_closed_form",
    "first_order_projected",
]


@dataclass(frozen=True)
class WeightTerm:
    amp: complex
    osc: float
    decay: float = 0.0
    power: int = 0
    # node group does not contain the final cumulative detuning
    intermediate: bool = False

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        out = self.amp * np.exp(-1j * self.osc * t - self.decay * t)
        if self.power:
            out = out * t**self.power
        return out


def _close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol * max(1.0, abs(a), abs(b))


class WeightFunction:
    """Sum of exponential terms; equal-frequency terms are merged."""

    __slots__ = ("terms",)

    def __init__(self, terms=(), merge: bool = True, tol: float = 1e-12):
        terms = [t for t in terms if t.amp != 0]
        self.terms = tuple(self._merge(terms, tol) if merge else terms)

    @staticmethod
    def _merge(terms, tol):
        terms = sorted(terms, key=lambda t: (t.power, t.intermediate, t.osc, t.decay))
        out: list[WeightTerm] = []
        for t in terms:
            if out:
                last = out[-1]
                if (last.power == t.power and last.intermediate == t.intermediate
                        and _close(last.osc, t.osc, tol) and _close(last.decay, t.decay, tol)):
                    out[-1] = WeightTerm(last.amp + t.amp, last.osc, last.decay, last.power, last.intermediate)
                    continue
            out.append(t)
        scale = max((abs(t.amp) for t in out), default=0.0)
        return [t for t in out if abs(t.amp) > 1e-15 * scale]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        total = np.zeros(t.shape, dtype=complex)
        for term in self.terms:
            total = total + term(t)
        return total if total.ndim else complex(total)

    def __add__(self, other: "WeightFunction") -> "WeightFunction":
        return WeightFunction(self.terms + other.terms)

    def __len__(self):
        return len(self.terms)

    def __iter__(self):
        return iter(self.terms)

    def __repr__(self):
        inner = ", ".join(
            f"{t.amp:.6g}*t^{t.power}*e^(-i{t.osc:.6g}t)" if t.power else f"{t.amp:.6g}*e^(-i{t.osc:.6g}t)"
            for t in self.terms
        )
        return f"WeightFunction({inner})"

    def scaled(self, c: complex) -> "WeightFunction":
        return WeightFunction(
            [WeightTerm(t.amp * c, t.osc, t.decay, t.power, t.intermediate) for t in self.terms], merge=False
        )

    def conj(self) -> "WeightFunction":
        """Complex conjugate as a function of real t: amp conjugated, osc negated."""
        return WeightFunction(
            [WeightTerm(t.amp.conjugate(), -t.osc, t.decay, t.power, t.intermediate) for t in self.terms]
        )

    def at_zero_frequency(self, tol: float = 0.0) -> complex:
        """Sum of amplitudes of constant (non-secular, |osc| <= tol) terms."""
        return complex(sum(t.amp for t in self.terms if t.power == 0 and abs(t.osc) <= tol))

    def without_decay(self) -> "WeightFunction":
        return WeightFunction([WeightTerm(t.amp, t.osc, 0.0, t.power, t.intermediate) for t in self.terms])

    @property
    def is_zero(self) -> bool:
        return not self.terms


@dataclass(frozen=True)
class Placement:
    """Which constituent is the perturbed one, and the order the rest are applied.

    ``order`` lists constituent indices in application order, starting with
    ``perturbed_index``; ``n_left`` counts the constituents applied on the left.
    """

    perturbed_index: int
    order: tuple[int, ...]
    n_left: int

    @property
    def sign(self) -> int:
        return -1 if self.n_left % 2 else 1


_PLACEMENT_CACHE: dict[int, tuple[Placement, ...]] = {}


def placements(n: int) -> tuple[Placement, ...]:
    """All 2^n placement-interleavings for a string of n+1 constituents.

    Left constituents p+1..n are applied nearest first, as are right
    constituents p-1..0; the two sequences are shuffled in every way.
    """
    if n in _PLACEMENT_CACHE:
        return _PLACEMENT_CACHE[n]
    out = []
    for p in range(n + 1):
        left = list(range(p + 1, n + 1))
        right = list(range(p - 1, -1, -1))
        for slots in itertools.combinations(range(n), len(left)):
            li, ri = iter(left), iter(right)
            slot_set = set(slots)
            order = [p] + [next(li) if k in slot_set else next(ri) for k in range(n)]
            out.append(Placement(p, tuple(order), len(left)))
    _PLACEMENT_CACHE[n] = tuple(out)
    return _PLACEMENT_CACHE[n]


def _cluster(values, tol):
    """Group indices whose values agree within ``tol`` (single linkage on sorted values)."""
    idx = sorted(range(len(values)), key=lambda i: values[i].real)
    groups = [[idx[0]]]
    for i in idx[1:]:
        if abs(values[i] - values[groups[-1][-1]]) <= tol:
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def _divided_difference(nodes, tol, final_index):
    """Terms of the divided difference of exp(-i z t) over ``nodes``.

    Nodes closer than ``tol`` are treated as one node of higher multiplicity;
    the result then carries ``t^k`` factors.
    """
    groups = _cluster(nodes, tol)
    centers = [sum(nodes[i] for i in g) / len(g) for g in groups]
    mult = [len(g) for g in groups]
    terms = []
    for gi, g in enumerate(groups):
        m = mult[gi]
        zeta = centers[gi]
        series = np.zeros(m, dtype=complex)
        series[0] = 1.0
        for hi in range(len(groups)):
            if hi == gi:
                continue
            d = zeta - centers[hi]
            mh = mult[hi]
            # (u + d)^(-mh) = sum_j (-1)^j C(mh+j-1, j) d^(-mh-j) u^j
            e = np.array([(-1) ** j * math.comb(mh + j - 1, j) * d ** (-mh - j) for j in range(m)], dtype=complex)
            series = np.convolve(series, e)[:m]
        for k in range(m):
            amp = series[m - 1 - k] * (-1j) ** k / math.factorial(k)
            terms.append(WeightTerm(complex(amp), float(zeta.real), float(-zeta.imag), k, final_index not in g))
    return terms


def _nodes(s: TransitionString, order, regulated: bool):
    d, th = s.deltas, s.thetas
    out = []
    for l in range(len(order)):
        D = math.fsum(d[i] for i in order[: l + 1])
        if regulated:
            out.append(complex(D, -math.fsum(th[i] for i in order[: l + 1])))
        else:
            out.append(complex(D, 0.0))
    return out


def _eps_for(s: TransitionString, eps_deg):
    if eps_deg is not None:
        return eps_deg
    scale = max(abs(x) for x in s.deltas) * len(s.deltas) if s.deltas else 1.0
    return 1e-9 * (scale if scale > 0 else 1.0)


def canonical_weight(s: TransitionString, order=None, *, limit: bool = False, eps_deg: float | None = None):
    """Weight of one application order, without couplings.

    ``order`` is a :class:`Placement` or a tuple of constituent indices
    (default: constituent 0 perturbed, the rest applied on the left).  With
    ``limit=True`` the regulators are sent to zero and coincident cumulative
    detunings (within ``eps_deg``) are merged analytically.
    """
    if order is None:
        order = placements(s.n)[0]
    if isinstance(order, Placement):
        pl = order
    else:
        order = tuple(order)
        p = order[0]
        pl = Placement(p, order, s.n - p)
    nodes = _nodes(s, pl.order, regulated=not limit)
    tol = _eps_for(s, eps_deg) if limit else 0.0
    terms = _divided_difference(nodes, tol, len(nodes) - 1)
    return WeightFunction(terms).scaled(pl.sign)


def _string_of(d) -> TransitionString:
    return d if isinstance(d, TransitionString) else d.canonical


def total_weight(d, policy=None, *, limit: bool = False, couplings: bool = True) -> WeightFunction:
    """Average over the n+1 perturbed positions of all signed interleavings.

    ``d`` is a :class:`TransitionString` or a diagram class (its canonical
    string is used).  Coupling amplitudes are multiplied in unless
    ``couplings=False``.
    """
    s = _string_of(d)
    eps = getattr(policy, "eps_deg", None) if policy is not None else None
    acc: list[WeightTerm] = []
    for pl in placements(s.n):
        acc.extend(canonical_weight(s, pl, limit=limit, eps_deg=eps).terms)
    scale = (s.coupling if couplings else 1.0) / (s.n + 1)
    return WeightFunction(acc).scaled(scale)


def reverse_weight(d, policy=None, *, limit: bool = False) -> WeightFunction:
    """Weight of the Hermitian-conjugate string: the conjugate of ``total_weight``."""
    return total_weight(d, policy, limit=limit).conj()


@dataclass(frozen=True)
class LimitWeight:
    weight: WeightFunction
    renormalization: WeightFunction
    degenerate_groups: tuple = field(default=())


def degenerate_limit_weight(d, policy) -> LimitWeight:
    """Regulator-free weight with coincident cumulative detunings resolved.

    Constant terms whose node group excludes the final cumulative detuning come
    from accidental lower-order resonances; they are returned separately in
    ``renormalization`` and removed from ``weight`` when
    ``policy.drop_renormalization`` is set.
    """
    s = _string_of(d)
    w = total_weight(s, policy, limit=True)
    T, kappa = policy.T, policy.kappa
    renorm = [t for t in w.terms if t.intermediate and abs(t.osc) * T < kappa]
    groups = []
    eps = _eps_for(s, policy.eps_deg)
    for pl in placements(s.n):
        nodes = _nodes(s, pl.order, regulated=False)
        for g in _cluster(nodes, eps):
            if len(g) > 1:
                groups.append((pl.order, tuple(sorted(g))))
    if policy.drop_renormalization:
        keep = [t for t in w.terms if t not in renorm]
        w = WeightFunction(keep, merge=False)
    return LimitWeight(w, WeightFunction(renorm, merge=False), tuple(groups))


def first_order_closed_form(di: float, dj: float):
    """Regulator-free n=1 weight of xi_j xi_i as a function of t (no couplings)."""

    def V1(t):
        t = np.asarray(t, dtype=float)
        return 0.5 * (
            np.exp(-1j * di * t) / dj
            - np.exp(-1j * dj * t) / di
            + np.exp(-1j * (di + dj) * t) * (1.0 / di - 1.0 / dj)
        )

    return V1


def first_order_projected(di: float, dj: float) -> float:
    """Constant left by projection when di + dj is resonant: (1/di - 1/dj)/2."""
    return 0.5 * (1.0 / di - 1.0 / dj)
