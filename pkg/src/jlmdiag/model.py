"""Light-matter interaction models: levels, modes, zeroth-order operators.

A zeroth-order operator is ``|to><from| (x) a`` (absorption) or
``|to><from| (x) a^dagger`` (emission) on a single bosonic mode.  Every model
carries each operator together with its Hermitian partner.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

__all__ = [
    "MatterLevel",
    "BosonMode",
    "ZerothOp",
    "ContinuumFamily",
    "GaussianEnvelope",
    "FlatEnvelope",
    "QubitOp",
    "QubitModel",
    "InteractionModel",
    "ModelValidationError",
    "model_errors",
    "validate_model",
    "build_preset",
    "embed_qubits",
    "discretize_continuum",
    "PRESETS",
]


@dataclass(frozen=True)
class MatterLevel:
    id: int
    name: str
    omega: float


@dataclass(frozen=True)
class BosonMode:
    sigma: str
    omega: float
    kind: str = "discrete"  # "discrete" or "continuum"
    quad_weight: float | None = None

    @property
    def label(self) -> str:
        if self.kind == "continuum":
            return f"{self.sigma}({self.omega:.6g})"
        return self.sigma


@dataclass(frozen=True)
class ZerothOp:
    """``|to><from|`` times ``a`` (``dagger=False``) or ``a^dagger`` on ``mode``.

    ``delta`` is filled in by :class:`InteractionModel` from the level and mode
    frequencies; a value passed by the caller is overwritten.
    """

    from_level: int
    to_level: int
    mode: int
    dagger: bool
    g: complex
    theta: float | None = None
    delta: float = float("nan")

    @property
    def partner_key(self) -> tuple[int, int, int, bool]:
        return (self.to_level, self.from_level, self.mode, not self.dagger)

    @property
    def key(self) -> tuple[int, int, int, bool]:
        return (self.from_level, self.to_level, self.mode, self.dagger)


# -- continuum envelopes ---------------------------------------------------


@dataclass(frozen=True)
class GaussianEnvelope:
    """g(w) = g0 * exp(-(w - center)^2 / (2 width^2))."""

    g0: float
    center: float
    width: float

    def __call__(self, w):
        w = np.asarray(w, dtype=float)
        return self.g0 * np.exp(-((w - self.center) ** 2) / (2.0 * self.width**2))


@dataclass(frozen=True)
class FlatEnvelope:
    g0: float

    def __call__(self, w):
        return np.full_like(np.asarray(w, dtype=float), self.g0)


@dataclass(frozen=True)
class ContinuumFamily:
    """Bookkeeping for one discretized continuum.

    ``transitions`` lists the (low, high) level pairs coupled by absorption
    from ``low`` to ``high``; ``mode_indices`` are the sampled modes.
    """

    sigma: str
    envelope: Callable
    support: tuple[float, float]
    nodes: int
    transitions: tuple[tuple[int, int], ...]
    mode_indices: tuple[int, ...] = ()


def discretize_continuum(envelope, support, nodes, sigma="k"):
    """Midpoint-rule samples of a coupling envelope.

    Returns ``(modes, couplings)`` where each mode is a continuum sample with
    ``quad_weight`` equal to the bin width and ``couplings[k] = g(w_k) sqrt(w)``.
    """
    lo, hi = float(support[0]), float(support[1])
    if not (hi > lo):
        raise ValueError("empty continuum support")
    nodes = int(nodes)
    if nodes < 1:
        raise ValueError("continuum needs at least one node")
    width = (hi - lo) / nodes
    omegas = lo + width * (np.arange(nodes) + 0.5)
    values = np.asarray(envelope(omegas), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise ValueError("non-finite envelope values")
    modes = [BosonMode(sigma, float(w), "continuum", width) for w in omegas]
    return modes, values * math.sqrt(width)


# -- the model -------------------------------------------------------------


class ModelValidationError(ValueError):
    def __init__(self, errors: Sequence[str]):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass(frozen=True)
class QubitOp:
    """Local qubit operator: ``sigma_+`` (raising) or ``sigma_-`` times ``a``/``a^dagger``."""

    qubit: int
    raising: bool
    mode: int
    dagger: bool
    g: complex


@dataclass(frozen=True)
class QubitModel:
    """N qubits written per qubit, before embedding into 2^N levels."""

    omegas: tuple[float, ...]
    modes: tuple[BosonMode, ...]
    ops: tuple[QubitOp, ...]

    @property
    def n_qubits(self) -> int:
        return len(self.omegas)


@dataclass(frozen=True)
class InteractionModel:
    levels: tuple[MatterLevel, ...]
    modes: tuple[BosonMode, ...]
    ops: tuple[ZerothOp, ...]
    continua: tuple[ContinuumFamily, ...] = ()
    qubit_form: QubitModel | None = None
    name: str = "model"
    _partner: tuple[int, ...] = field(default=(), repr=False, compare=False)

    def __post_init__(self):
        levels = tuple(self.levels)
        modes = tuple(self.modes)
        by_id = {lv.id: lv for lv in levels}
        deltas = []
        for op in self.ops:
            lf, lt = by_id.get(op.from_level), by_id.get(op.to_level)
            if lf is None or lt is None or not (0 <= op.mode < len(modes)):
                deltas.append(float("nan"))
                continue
            w = modes[op.mode].omega
            deltas.append((-w if op.dagger else w) - (lt.omega - lf.omega))
        finite = [abs(d) for d in deltas if math.isfinite(d)]
        scale = max(finite) if finite and max(finite) > 0 else 1.0
        theta_default = 1e-9 * scale
        ops = tuple(
            dataclasses.replace(
                op,
                g=complex(op.g),
                delta=d,
                theta=theta_default if op.theta is None else float(op.theta),
            )
            for op, d in zip(self.ops, deltas)
        )
        index = {op.key: i for i, op in enumerate(ops)}
        partner = tuple(index.get(op.partner_key, -1) for op in ops)
        object.__setattr__(self, "levels", levels)
        object.__setattr__(self, "modes", modes)
        object.__setattr__(self, "ops", ops)
        object.__setattr__(self, "continua", tuple(self.continua))
        object.__setattr__(self, "_partner", partner)

    @property
    def M(self) -> int:
        return len(self.ops)

    def level_index(self, level_id: int) -> int:
        for i, lv in enumerate(self.levels):
            if lv.id == level_id:
                return i
        raise KeyError(level_id)

    def level(self, level_id: int) -> MatterLevel:
        return self.levels[self.level_index(level_id)]

    def level_by_name(self, name: str) -> MatterLevel:
        for lv in self.levels:
            if lv.name == name:
                return lv
        raise KeyError(name)

    def partner(self, op_index: int) -> int:
        p = self._partner[op_index]
        if p < 0:
            raise KeyError(f"operator {op_index} has no Hermitian partner")
        return p

    def mode_index(self, sigma: str, omega: float | None = None) -> int:
        for i, m in enumerate(self.modes):
            if m.sigma == sigma and (omega is None or m.omega == omega):
                return i
        raise KeyError((sigma, omega))

    def scaled(self, lam: float) -> "InteractionModel":
        """Copy with every coupling multiplied by ``lam``."""
        ops = tuple(dataclasses.replace(op, g=op.g * lam) for op in self.ops)
        return dataclasses.replace(self, ops=ops)

    def with_couplings(self, gs) -> "InteractionModel":
        ops = tuple(dataclasses.replace(op, g=complex(g)) for op, g in zip(self.ops, gs))
        return dataclasses.replace(self, ops=ops)

    def free_energy(self, level_id: int, occupations) -> float:
        return self.level(level_id).omega + float(
            sum(n * m.omega for n, m in zip(occupations, self.modes))
        )


def model_errors(model: InteractionModel) -> list[str]:
    errors: list[str] = []
    ids = [lv.id for lv in model.levels]
    if len(set(ids)) != len(ids):
        errors.append("duplicate level id")
    for lv in model.levels:
        if not math.isfinite(lv.omega):
            errors.append(f"level {lv.name}: non-finite omega")
    labels = [(m.sigma, m.omega) for m in model.modes]
    if len(set(labels)) != len(labels):
        errors.append("duplicate mode label")
    for m in model.modes:
        if not (math.isfinite(m.omega) and m.omega >= 0):
            errors.append(f"mode {m.label}: omega must be finite and >= 0")
        if m.kind == "continuum":
            if m.quad_weight is None or not m.quad_weight > 0:
                errors.append(f"mode {m.label}: continuum sample needs quad_weight > 0")
        elif m.kind == "discrete":
            if m.quad_weight is not None:
                errors.append(f"mode {m.label}: discrete mode carries a quad_weight")
        else:
            errors.append(f"mode {m.label}: unknown kind {m.kind!r}")
    id_set = set(ids)
    seen = set()
    for i, op in enumerate(model.ops):
        if op.from_level not in id_set or op.to_level not in id_set:
            errors.append(f"op {i}: dangling level id")
            continue
        if not (0 <= op.mode < len(model.modes)):
            errors.append(f"op {i}: dangling mode index")
            continue
        if op.from_level == op.to_level:
            errors.append(f"op {i}: diagonal zeroth-order operator")
        if not (op.theta is not None and op.theta > 0):
            errors.append(f"op {i}: theta must be > 0")
        if op.key in seen:
            errors.append(f"op {i}: duplicate operator")
        seen.add(op.key)
        p = model._partner[i]
        if p < 0:
            errors.append(f"op {i}: missing Hermitian partner")
        elif abs(model.ops[p].g - op.g.conjugate()) > 1e-12 * max(1.0, abs(op.g)):
            errors.append(f"op {i}: Hermitian partner coupling is not the conjugate")
    return errors


def validate_model(model: InteractionModel) -> InteractionModel:
    """Return ``model`` unchanged, or raise with every violated invariant."""
    errors = model_errors(model)
    if errors:
        raise ModelValidationError(errors)
    return model


# -- construction helpers --------------------------------------------------


def _with_partners(pairs):
    """Expand (from, to, mode, dagger, g) absorption-side entries with partners."""
    ops = []
    for f, t, m, dag, g, *rest in pairs:
        theta = rest[0] if rest else None
        ops.append(ZerothOp(f, t, m, dag, complex(g), theta))
        ops.append(ZerothOp(t, f, m, not dag, complex(g).conjugate(), theta))
    return ops


def embed_qubits(qm: QubitModel, name: str = "qubits") -> InteractionModel:
    """Lift per-qubit operators to elementary transitions on 2^N levels.

    Basis index ``b`` lists qubit 1 as the most significant bit, so for N=2
    the levels are ``g1,g2``, ``g1,e2``, ``e1,g2``, ``e1,e2``.  Level energies
    are ``sum_l (+-omega_l / 2)``, the spectrum of ``sum_l omega_l sigma_z^l / 2``.
    """
    if not isinstance(qm, QubitModel):
        raise TypeError("embed_qubits expects a QubitModel")
    N = qm.n_qubits
    levels = []
    for b in range(2**N):
        bits = [(b >> (N - 1 - l)) & 1 for l in range(N)]
        nm = ",".join(("e" if x else "g") + str(l + 1) for l, x in enumerate(bits))
        w = sum((0.5 if x else -0.5) * qm.omegas[l] for l, x in enumerate(bits))
        levels.append(MatterLevel(b, nm, w))
    ops = []
    for q in qm.ops:
        if not (0 <= q.qubit < N):
            raise ValueError(f"qubit index {q.qubit} out of range")
        shift = N - 1 - q.qubit
        for b in range(2**N):
            bit = (b >> shift) & 1
            if bit != (0 if q.raising else 1):
                continue
            ops.append(ZerothOp(b, b ^ (1 << shift), q.mode, q.dagger, q.g))
    return InteractionModel(tuple(levels), qm.modes, tuple(ops), qubit_form=qm, name=name)


def _qubit_model(omegas, omega_c, gs, counter_rotating):
    omegas = tuple(float(w) for w in omegas)
    gs = [complex(g) for g in gs]
    if len(gs) != len(omegas):
        raise ValueError("need one coupling per qubit")
    ops = []
    for l, g in enumerate(gs):
        ops.append(QubitOp(l, True, 0, False, g))  # sigma_+ a
        ops.append(QubitOp(l, False, 0, True, g.conjugate()))  # sigma_- a^dagger
        if counter_rotating:
            ops.append(QubitOp(l, False, 0, False, g))  # sigma_- a
            ops.append(QubitOp(l, True, 0, True, g.conjugate()))  # sigma_+ a^dagger
    return QubitModel(omegas, (BosonMode("c", float(omega_c)),), tuple(ops))


def _two_level(p, counter_rotating, name):
    we, wc, g = float(p["omega_e"]), float(p["omega_c"]), complex(p["g"])
    levels = (MatterLevel(0, "g", 0.0), MatterLevel(1, "e", we))
    pairs = [(0, 1, 0, False, g)]
    if counter_rotating:
        pairs.append((1, 0, 0, False, g))
    return InteractionModel(levels, (BosonMode("c", wc),), tuple(_with_partners(pairs)), name=name)


def _tc_params(p):
    if "omegas" in p:
        omegas = list(p["omegas"])
    else:
        omegas = [float(p.get("omega_q", 1.0))] * int(p["N"])
    gs = p.get("gs")
    if gs is None:
        gs = [p["g"]] * len(omegas)
    return omegas, float(p["omega_c"]), list(gs)


_ORDERING = {
    "three_level_xi": ("alpha < beta < gamma", lambda a, b, c: a < b < c),
    "three_level_lambda": ("beta above alpha and gamma", lambda a, b, c: b > a and b > c),
    "three_level_v": ("beta below alpha and gamma", lambda a, b, c: b < a and b < c),
}


def _three_level(p, name):
    wa, wb, wc = (float(p[k]) for k in ("omega_alpha", "omega_beta", "omega_gamma"))
    rule, ok = _ORDERING[name]
    if not ok(wa, wb, wc):
        raise ValueError(f"{name} requires {rule}")
    levels = (MatterLevel(0, "alpha", wa), MatterLevel(1, "beta", wb), MatterLevel(2, "gamma", wc))
    counter = bool(p.get("counter_rotating", False))
    shared = bool(p.get("shared_family", False))
    modes: list[BosonMode] = []
    pairs = []
    continua = []
    fam_names = ("i", "i") if shared else ("i", "j")
    # (level a, level b, family tag, coupling key, discrete frequency key)
    legs = ((0, 1, fam_names[0], "g_ab", "omega_i"), (1, 2, fam_names[1], "g_bg", "omega_j"))
    family_modes: dict[str, list[int]] = {}
    family_transitions: dict[str, list[tuple[int, int]]] = {}
    family_env: dict[str, tuple] = {}
    for a, b, fam, gkey, wkey in legs:
        lo, hi = (a, b) if levels[a].omega < levels[b].omega else (b, a)
        cont = p.get(f"continuum_{fam}")
        if fam not in family_modes:
            if cont is not None:
                env = cont["envelope"]
                new, gk = discretize_continuum(env, cont["support"], cont["nodes"], sigma=fam)
                family_env[fam] = (env, tuple(cont["support"]), int(cont["nodes"]), gk)
            else:
                new = [BosonMode(fam, float(p[wkey]))]
                family_env[fam] = None
            family_modes[fam] = list(range(len(modes), len(modes) + len(new)))
            family_transitions[fam] = []
            modes.extend(new)
        family_transitions[fam].append((lo, hi))
        if family_env[fam] is not None:
            couplings = list(family_env[fam][3])
        else:
            couplings = [complex(p[gkey])]
        for mi, g in zip(family_modes[fam], couplings):
            pairs.append((lo, hi, mi, False, g))
            if counter:
                pairs.append((hi, lo, mi, False, g))
    for fam, info in family_env.items():
        if info is not None:
            env, support, nodes, _ = info
            continua.append(
                ContinuumFamily(fam, env, support, nodes, tuple(family_transitions[fam]), tuple(family_modes[fam]))
            )
    return InteractionModel(levels, tuple(modes), tuple(_with_partners(pairs)), tuple(continua), name=name)


_DEFAULTS = {
    "jc": {"omega_e": 1.0, "omega_c": 0.8, "g": 0.02},
    "rabi": {"omega_e": 1.0, "omega_c": 0.8, "g": 0.02},
    "tavis_cummings": {"N": 2, "omega_q": 1.0, "omega_c": 0.7, "g": 0.02},
    "dicke": {"N": 2, "omega_q": 1.0, "omega_c": 0.7, "g": 0.02},
    "three_level_xi": {
        "omega_alpha": 0.0, "omega_beta": 1.0, "omega_gamma": 1.9,
        "omega_i": 0.8, "omega_j": 1.1, "g_ab": 0.02, "g_bg": 0.02,
    },
    "three_level_lambda": {
        "omega_alpha": 0.0, "omega_beta": 1.0, "omega_gamma": 0.3,
        "omega_i": 0.8, "omega_j": 0.5, "g_ab": 0.02, "g_bg": 0.02,
    },
    "three_level_v": {
        "omega_alpha": 1.0, "omega_beta": 0.0, "omega_gamma": 1.3,
        "omega_i": 0.8, "omega_j": 1.1, "g_ab": 0.02, "g_bg": 0.02,
    },
}

PRESETS = tuple(_DEFAULTS)


def build_preset(name: str, params: dict | None = None, **kwargs) -> InteractionModel:
    """Build one of the worked-example models.

    Parameters not supplied fall back to the defaults in ``_DEFAULTS``; JC and
    Rabi use omega_e=1, omega_c=0.8, g=0.02.  Three-level presets accept
    ``continuum_i`` / ``continuum_j`` dicts with ``envelope``, ``support`` and
    ``nodes`` in place of the discrete frequencies ``omega_i`` / ``omega_j``.
    """
    if name not in _DEFAULTS:
        raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")
    p = dict(_DEFAULTS[name])
    p.update(params or {})
    p.update(kwargs)
    if name == "jc":
        model = _two_level(p, False, name)
    elif name == "rabi":
        model = _two_level(p, True, name)
    elif name in ("tavis_cummings", "dicke"):
        omegas, wc, gs = _tc_params(p)
        model = embed_qubits(_qubit_model(omegas, wc, gs, name == "dicke"), name=name)
    else:
        model = _three_level(p, name)
    return validate_model(model)
