"""Operator calculus for strings of zeroth-order operators.

Monomials are stored normal ordered as a sorted tuple of ``(mode, p, q)``
meaning ``(a_mode^dagger)^p a_mode^q``; the empty tuple is the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .fock import FockBasis, FockTruncation, TruncationError
from .model import InteractionModel, ZerothOp

__all__ = [
    "BosonString",
    "NormalPolynomial",
    "TransitionString",
    "compose",
    "normal_order",
    "detuning_of",
    "liouvillian_eigencheck",
    "hermitian_conjugate",
    "dagger_monomial",
]

Monomial = tuple  # tuple[tuple[int, int, int], ...]


@dataclass(frozen=True)
class BosonString:
    """Product of bosonic factors, left to right as written."""

    factors: tuple[tuple[int, bool], ...]

    def __len__(self):
        return len(self.factors)


class NormalPolynomial:
    """Linear combination of normal-ordered monomials."""

    __slots__ = ("terms",)

    def __init__(self, terms: dict | None = None):
        self.terms: dict[Monomial, complex] = {}
        for mono, c in (terms or {}).items():
            if c != 0:
                self.terms[mono] = complex(c)

    @classmethod
    def identity(cls) -> "NormalPolynomial":
        return cls({(): 1.0})

    def __iter__(self):
        return iter(sorted(self.terms.items()))

    def __len__(self):
        return len(self.terms)

    def __eq__(self, other):
        if not isinstance(other, NormalPolynomial):
            return NotImplemented
        keys = set(self.terms) | set(other.terms)
        return all(abs(self.terms.get(k, 0) - other.terms.get(k, 0)) < 1e-12 for k in keys)

    def __repr__(self):
        return f"NormalPolynomial({dict(sorted(self.terms.items()))})"

    def __add__(self, other: "NormalPolynomial") -> "NormalPolynomial":
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, 0) + c
        return NormalPolynomial({k: c for k, c in out.items() if c != 0})

    def scaled(self, c: complex) -> "NormalPolynomial":
        return NormalPolynomial({k: v * c for k, v in self.terms.items()})

    def to_string(self) -> BosonString:
        """Single-monomial polynomials only: the normal-ordered factor list."""
        if len(self.terms) != 1:
            raise ValueError("to_string needs exactly one monomial")
        (mono,) = self.terms
        return BosonString(monomial_factors(mono))


def monomial_factors(mono: Monomial) -> tuple[tuple[int, bool], ...]:
    out = []
    for mode, p, q in mono:
        out.extend([(mode, True)] * p)
        out.extend([(mode, False)] * q)
    return tuple(out)


def dagger_monomial(mono: Monomial) -> Monomial:
    return tuple((mode, q, p) for mode, p, q in mono)


def _order_single_mode(word, c):
    """Normal order a word in one mode; returns {(p, q): coeff}."""
    poly = {(0, 0): 1.0}
    for dag in word:
        nxt: dict = {}
        for (p, q), v in poly.items():
            if not dag:
                nxt[(p, q + 1)] = nxt.get((p, q + 1), 0) + v
            else:
                # (a+^p a^q) a+ = a+^(p+1) a^q + c q a+^p a^(q-1)
                nxt[(p + 1, q)] = nxt.get((p + 1, q), 0) + v
                if q:
                    nxt[(p, q - 1)] = nxt.get((p, q - 1), 0) + c * q * v
        poly = nxt
    return poly


def normal_order(b: BosonString | Iterable, contraction=None) -> NormalPolynomial:
    """Normal order a bosonic product.

    ``contraction`` maps a mode index to the constant produced by ``[a, a^dagger]``
    for that mode; it defaults to 1.
    """
    factors = b.factors if isinstance(b, BosonString) else tuple(b)
    words: dict[int, list[bool]] = {}
    for mode, dag in factors:
        words.setdefault(mode, []).append(bool(dag))
    result = {(): 1.0 + 0j}
    for mode in sorted(words):
        c = 1.0 if contraction is None else contraction(mode)
        single = _order_single_mode(words[mode], c)
        nxt = {}
        for mono, v in result.items():
            for (p, q), w in single.items():
                key = mono + ((mode, p, q),) if (p or q) else mono
                nxt[key] = nxt.get(key, 0) + v * w
        result = nxt
    return NormalPolynomial(result)


def detuning_of(op: ZerothOp, model: InteractionModel | None = None) -> float:
    """Eigenvalue of the free Liouvillian for ``op``: (-1)^c w_mode - (w_to - w_from)."""
    if model is None:
        return op.delta
    w = model.modes[op.mode].omega
    return (-w if op.dagger else w) - (model.level(op.to_level).omega - model.level(op.from_level).omega)


def _key(model, i):
    op = model.ops[i]
    m = model.modes[op.mode]
    return (op.from_level, op.to_level, m.sigma, m.omega, op.dagger)


@dataclass(frozen=True)
class TransitionString:
    """Ordered product of zeroth-order operators, stored in process order.

    ``ops[0]`` is applied first (rightmost in the product), ``ops[-1]`` last.
    """

    ops: tuple[int, ...]
    model: InteractionModel = field(compare=False, repr=False, hash=False)

    @property
    def n(self) -> int:
        return len(self.ops) - 1

    def op(self, l: int) -> ZerothOp:
        return self.model.ops[self.ops[l]]

    @property
    def from_level(self) -> int:
        return self.op(0).from_level

    @property
    def to_level(self) -> int:
        return self.op(self.n).to_level

    @property
    def matter(self) -> tuple[int, int]:
        """(to, from) of the matter element ``|to><from|``."""
        return (self.to_level, self.from_level)

    @property
    def closed_loop(self) -> bool:
        return self.to_level == self.from_level

    @property
    def deltas(self) -> tuple[float, ...]:
        return tuple(self.model.ops[i].delta for i in self.ops)

    @property
    def thetas(self) -> tuple[float, ...]:
        return tuple(self.model.ops[i].theta for i in self.ops)

    @property
    def cumulative_detunings(self) -> tuple[float, ...]:
        d = self.deltas
        return tuple(math.fsum(d[: l + 1]) for l in range(len(d)))

    @property
    def cumulative_regulators(self) -> tuple[float, ...]:
        th = self.thetas
        return tuple(math.fsum(th[: l + 1]) for l in range(len(th)))

    @property
    def final_detuning(self) -> float:
        return math.fsum(self.deltas)

    @property
    def coupling(self) -> complex:
        c = 1.0 + 0j
        for i in self.ops:
            c *= self.model.ops[i].g
        return c

    @property
    def boson_string(self) -> BosonString:
        # operator product xi_n ... xi_0 written left to right
        return BosonString(tuple((self.op(l).mode, self.op(l).dagger) for l in range(self.n, -1, -1)))

    def sort_key(self):
        return tuple(_key(self.model, i) for i in self.ops)

    def is_valid(self) -> bool:
        return all(self.op(l).to_level == self.op(l + 1).from_level for l in range(self.n))

    def label(self) -> str:
        parts = []
        for l in range(self.n, -1, -1):
            op = self.op(l)
            m = self.model.modes[op.mode]
            a = "a+" if op.dagger else "a"
            fr = self.model.level(op.from_level).name
            to = self.model.level(op.to_level).name
            parts.append(f"[{to}<-{fr} {a}_{m.label}]")
        return " ".join(parts)


def compose(op_next: int, s: TransitionString | None, model: InteractionModel | None = None):
    """Append operator index ``op_next`` after ``s``; ``None`` when matter parts do not overlap.

    With ``s=None`` a length-one string is started (``model`` required).
    """
    if s is None:
        return TransitionString((op_next,), model)
    if s.model.ops[op_next].from_level != s.to_level:
        return None
    return TransitionString(s.ops + (op_next,), s.model)


def hermitian_conjugate(s: TransitionString) -> TransitionString:
    """(xi_n ... xi_0)^dagger = xi_0^dagger ... xi_n^dagger."""
    return TransitionString(tuple(s.model.partner(i) for i in reversed(s.ops)), s.model)


def _matrix(basis: FockBasis, s: TransitionString) -> np.ndarray:
    ops = [basis.operator(s.op(l).to_level, s.op(l).from_level,
                          ((s.op(l).mode, 1, 0),) if s.op(l).dagger else ((s.op(l).mode, 0, 1),))
           for l in range(s.n + 1)]
    out = np.eye(basis.dim, dtype=complex)
    for A in ops:
        out = A @ out
    return out


def liouvillian_eigencheck(s: TransitionString, t: float, trunc: FockTruncation | None = None,
                           tol: float = 1e-10) -> bool:
    """Check ``e^{iH0 t} S e^{-iH0 t} = e^{-i Delta_n t} S`` on a truncated space."""
    if trunc is None:
        trunc = FockTruncation(n_max=s.n + 2)
    basis = FockBasis(s.model, trunc)
    S = _matrix(basis, s)
    norm = np.linalg.norm(S)
    if norm == 0:
        raise TruncationError("truncation too small to represent the string")
    phase = np.exp(1j * np.diag(basis.free_hamiltonian()).real * t)
    lhs = phase[:, None] * S * phase.conj()[None, :]
    rhs = np.exp(-1j * s.final_detuning * t) * S
    return bool(np.linalg.norm(lhs - rhs) <= tol * max(1.0, norm))
