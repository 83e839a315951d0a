"""Enumeration and grouping of order-n operator strings."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .algebra import TransitionString, hermitian_conjugate
from .model import InteractionModel

__all__ = [
    "DiagramClass",
    "TermClassification",
    "ResourceError",
    "enumerate_strings",
    "enumerate_order_n",
    "combinatorial_bound",
    "classify",
    "render_diagram",
]


class ResourceError(RuntimeError):
    pass


@dataclass(frozen=True)
class DiagramClass:
    """All orderings of one multiset of constituents, plus their conjugates.

    ``members`` lists every nonzero string built from the same constituents
    as ``canonical`` (canonical first); ``cyclic_members`` is the rotation
    orbit of ``canonical`` and is empty for open strings.  ``hc_partner`` is
    the conjugate of ``canonical``, or ``None`` when the conjugate strings
    belong to ``members`` already; ``hc_members`` lists them otherwise.
    ``boson_variants`` counts enumerated strings with the same matter path as
    ``canonical``.
    """

    id: str
    n: int
    canonical: TransitionString
    members: tuple[TransitionString, ...]
    cyclic_members: tuple[TransitionString, ...]
    hc_partner: TransitionString | None
    hc_members: tuple[TransitionString, ...]
    multiplicity_m: int
    closed_loop: bool
    boson_variants: int = 1

    @property
    def strings(self) -> tuple[TransitionString, ...]:
        return self.members + self.hc_members

    @property
    def self_conjugate(self) -> bool:
        return self.hc_partner is None

    @property
    def final_detuning(self) -> float:
        return self.canonical.final_detuning

    @property
    def multiplicity_bound(self) -> int:
        return 2**self.multiplicity_m


@dataclass(frozen=True)
class TermClassification:
    kind: str  # resonant | off_resonant | energy_renormalization
    final_detuning: float
    retained: bool


def enumerate_strings(model: InteractionModel, n: int):
    """Yield every nonzero order-n string as a tuple of op indices (process order)."""
    if n < 0:
        raise ValueError("n must be >= 0")
    out_edges: dict[int, list[int]] = {}
    for i, op in enumerate(model.ops):
        out_edges.setdefault(op.from_level, []).append(i)

    def rec(prefix, level, depth):
        if depth == n + 1:
            yield tuple(prefix)
            return
        for i in out_edges.get(level, ()):
            prefix.append(i)
            yield from rec(prefix, model.ops[i].to_level, depth + 1)
            prefix.pop()

    for i, op in enumerate(model.ops):
        yield from rec([i], op.to_level, 1)


def _rotations(ops):
    return [ops[k:] + ops[:k] for k in range(len(ops))]


def _multiplicity(model, ops) -> int:
    modes: dict[int, set] = {}
    for i in ops:
        op = model.ops[i]
        modes.setdefault(op.mode, set()).add(op.dagger)
    return sum(1 for i in ops if len(modes[model.ops[i].mode]) == 2)


def enumerate_order_n(model: InteractionModel, n: int, max_classes: int = 10**6,
                      max_strings: int | None = None) -> list[DiagramClass]:
    """Group all nonzero order-n strings into classes.

    Strings built from the same multiset of constituents share a class, as do
    their Hermitian conjugates.  For closed loops at n=1 this is exactly the
    cyclic-rotation grouping.
    """
    partner = [model.partner(i) for i in range(model.M)]
    keys = [None] * model.M
    for i, op in enumerate(model.ops):
        m = model.modes[op.mode]
        keys[i] = (op.from_level, op.to_level, m.sigma, m.omega, op.dagger)

    def skey(ops):
        return tuple(keys[i] for i in ops)

    groups: dict[tuple, list] = {}
    path_count: dict = {}
    count = 0
    for ops in enumerate_strings(model, n):
        count += 1
        if max_strings is not None and count > max_strings:
            raise ResourceError(f"more than {max_strings} strings at order {n}")
        path = tuple((model.ops[i].from_level, model.ops[i].to_level) for i in ops)
        path_count[path] = path_count.get(path, 0) + 1
        ms = tuple(sorted(ops))
        if ms not in groups:
            hc_ms = tuple(sorted(partner[i] for i in ms))
            if hc_ms not in groups and len(groups) >= 2 * max_classes:
                raise ResourceError(f"more than {max_classes} diagram classes at order {n}; raise max_classes")
            groups[ms] = []
        groups[ms].append(ops)

    records = []
    done = set()
    for ms, strings in groups.items():
        if ms in done:
            continue
        hc_ms = tuple(sorted(partner[i] for i in ms))
        done.add(ms)
        done.add(hc_ms)
        primary = sorted(strings, key=skey)
        other = None if hc_ms == ms else sorted(groups[hc_ms], key=skey)
        if other is not None and skey(other[0]) < skey(primary[0]):
            primary, other = other, primary
        records.append((skey(primary[0]), primary, other))
    if len(records) > max_classes:
        raise ResourceError(f"more than {max_classes} diagram classes at order {n}; raise max_classes")
    records.sort(key=lambda r: r[0])

    classes = []
    for idx, (_, primary, other) in enumerate(records):
        best = primary[0]
        canon = TransitionString(best, model)
        members = tuple(TransitionString(o, model) for o in primary)
        closed = canon.closed_loop
        if closed:
            rot = set(_rotations(best))
            cyclic = (canon,) + tuple(m for m in members if m.ops in rot and m.ops != best)
        else:
            cyclic = ()
        if other is None:
            partner_s, hc_members = None, ()
        else:
            hc_best = tuple(partner[i] for i in reversed(best))
            partner_s = TransitionString(hc_best, model)
            hc_members = (partner_s,) + tuple(TransitionString(o, model) for o in other if o != hc_best)
        path = tuple((model.ops[i].from_level, model.ops[i].to_level) for i in best)
        classes.append(
            DiagramClass(
                id=f"n{n}-{idx}",
                n=n,
                canonical=canon,
                members=members,
                cyclic_members=cyclic,
                hc_partner=partner_s,
                hc_members=hc_members,
                multiplicity_m=_multiplicity(model, best),
                closed_loop=closed,
                boson_variants=path_count.get(path, 1),
            )
        )
    return classes


def combinatorial_bound(M: int, n: int) -> dict:
    """Upper bounds on operator strings and diagram classes at order n."""
    if M % 2 or M < 0:
        raise ValueError("M must be a non-negative even integer")
    if n < 0:
        raise ValueError("n must be >= 0")
    diagrams = math.comb(M + n, n + 1)
    out = {"operators": 2 * (n + 1) * diagrams, "diagrams": diagrams}
    if n == 1:
        out["first_order_tight"] = M // 2 + math.comb(M // 2, 2)
    if n == 2:
        out["second_order_tight"] = M * (M * M + 2) // 12
    return out


def classify(d: DiagramClass, policy) -> TermClassification:
    delta = d.final_detuning
    retained = abs(delta) * policy.T < policy.kappa
    if retained:
        kind = "energy_renormalization" if d.closed_loop else "resonant"
    else:
        kind = "off_resonant"
    return TermClassification(kind, delta, retained)


# -- rendering -------------------------------------------------------------


def _fmt(x: float) -> str:
    s = f"{x:.12g}"
    return "0" if s in ("-0", "0") else s


def _strands(s: TransitionString):
    """Merge consecutive identical constituents into one strand with extra arrowheads."""
    model = s.model
    out = []
    for l in range(s.n + 1):
        i = s.ops[l]
        if out and out[-1][0] == i:
            out[-1][1] += 1
        else:
            out.append([i, 1, l])
    strands = []
    cum = s.cumulative_detunings
    for i, heads, l in out:
        op = model.ops[i]
        strands.append((op, heads, cum[l]))
    return strands


def render_diagram(d: DiagramClass, format: str = "text") -> str:
    """Text or DOT rendering of a class's canonical string.

    Absorption strands sit below the matter axis and emission strands above.
    Each strand carries the cumulative detuning reached after it.
    """
    s = d.canonical
    model = s.model
    name = lambda lid: model.level(lid).name  # noqa: E731
    if format == "text":
        lines = [f"diagram {d.id}: order {d.n}, {'closed loop' if d.closed_loop else 'open'}, "
                 f"m={d.multiplicity_m}, variants={d.boson_variants}"]
        axis = [name(s.from_level)] + [name(model.ops[i].to_level) for i in s.ops]
        above, below = [], []
        for op, heads, cum in _strands(s):
            arrow = "-" + (">" * heads) + "-"
            mode = model.modes[op.mode].label
            entry = f"{name(op.from_level)} {arrow} {name(op.to_level)}  {'emit' if op.dagger else 'absorb'} {mode}  Delta={_fmt(cum)}"
            (above if op.dagger else below).append(entry)
        for e in above:
            lines.append(f"  above | {e}")
        lines.append("  axis  | " + " === ".join(axis))
        for e in below:
            lines.append(f"  below | {e}")
        if d.n == 0:
            lines.append("  loop  | none")
        else:
            lines.append(f"  loop  | Delta={_fmt(s.final_detuning)} multiplicity<=2^{d.multiplicity_m}")
        return "\n".join(lines) + "\n"
    if format == "dot":
        gid = d.id.replace("-", "_")
        lines = [f"digraph {gid} {{", "  rankdir=LR;"]
        used = []
        for lid in [s.from_level] + [model.ops[i].to_level for i in s.ops]:
            if lid not in used:
                used.append(lid)
        for lid in used:
            lines.append(f'  "{name(lid)}";')
        for op, heads, cum in _strands(s):
            mode = model.modes[op.mode].label
            side = "above" if op.dagger else "below"
            head = "normal" * heads
            lines.append(
                f'  "{name(op.from_level)}" -> "{name(op.to_level)}" '
                f'[label="{"a+" if op.dagger else "a"} {mode}", side="{side}", '
                f'arrowhead="{head}", detuning="{_fmt(cum)}"];'
            )
        lines.append("}")
        return "\n".join(lines) + "\n"
    raise ValueError(f"unsupported format {format!r}")
