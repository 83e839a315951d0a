"""Brute-force references: nested quadrature of weights and truncated-Fock dynamics.

Nothing here uses the closed-form weight algebra; the weight oracle integrates
the nested time integral directly on a grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .algebra import TransitionString
from .fock import FockBasis, FockTruncation, TruncationError
from .model import InteractionModel
from .weights import Placement

__all__ = [
    "quadrature_weight",
    "fock_hamiltonian",
    "dressed_spectrum",
    "dressed_states",
    "propagate",
    "pair_splitting",
    "flop_frequency",
    "pv_window_extrapolation",
    "ComparisonReport",
    "compare_effective_vs_exact",
    "OBSERVABLES",
]


# -- nested time integrals -------------------------------------------------


def _nested_on_grid(z, t, N):
    """F_n(t) for F_0 = e^{-i z_0 s}, F_k(s) = -i int_0^s e^{-i z_k (s-u)} F_{k-1}(u) du.

    Each level is a cumulative trapezoid of ``e^{i z_k u} F_{k-1}(u)``.
    """
    s = np.linspace(0.0, t, N + 1)
    F = np.exp(-1j * z[0] * s)
    for zk in z[1:]:
        G = integrate.cumulative_trapezoid(np.exp(1j * zk * s) * F, s, initial=0.0)
        F = -1j * np.exp(-1j * zk * s) * G
    return F[-1]


def quadrature_weight(s: TransitionString, placement: Placement, t: float, steps: int = 64,
                      tol: float = 1e-10, max_steps: int = 2**22, regulated: bool = True) -> complex:
    """Nested-integral weight of one application order at time ``t`` (no couplings).

    Starts from ``steps`` grid intervals and doubles them, Richardson
    extrapolating in ``h^2``, until successive estimates agree to ``tol``
    relative to their size.  ``regulated=False`` integrates with all
    regulators set to zero, which is finite at any fixed ``t``.
    """
    if steps < 64:
        raise ValueError("steps must be >= 64")
    if t == 0:
        return 0j if s.n > 0 else 1.0 + 0j
    d = [s.model.ops[i].delta for i in s.ops]
    th = [s.model.ops[i].theta if regulated else 0.0 for i in s.ops]
    z, D, Th = [], 0.0, 0.0
    for i in placement.order:
        D += d[i]
        Th += th[i]
        z.append(complex(D, -Th))
    N = max(int(steps), int(math.ceil(4 * abs(t) * max(abs(x) for x in z))))
    table: list[list[complex]] = []
    prev = None
    while N <= max_steps:
        row = [_nested_on_grid(z, t, N)]
        for k, earlier in enumerate(table[-1] if table else []):
            f = 4.0 ** (k + 1)
            row.append(row[k] + (row[k] - earlier) / (f - 1.0))
        table.append(row)
        est = row[-1]
        if prev is not None and abs(est - prev) <= tol * max(abs(est), 1e-300):
            return placement.sign * est
        prev = est
        N *= 2
    raise RuntimeError("nested quadrature did not converge")


# -- exact Hamiltonians ----------------------------------------------------


def fock_hamiltonian(model: InteractionModel, trunc: FockTruncation | FockBasis | None = None) -> np.ndarray:
    basis = trunc if isinstance(trunc, FockBasis) else FockBasis(model, trunc or FockTruncation())
    H = basis.free_hamiltonian()
    for op in model.ops:
        mono = ((op.mode, 1, 0),) if op.dagger else ((op.mode, 0, 1),)
        basis.add_operator(H, op.g, op.to_level, op.from_level, mono)
    return H


def _check_hermitian(H, tol=1e-10):
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("matrix must be square")
    scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
    if np.max(np.abs(H - H.conj().T), initial=0.0) > tol * scale:
        raise ValueError("matrix is not Hermitian")
    return H


def dressed_spectrum(H) -> np.ndarray:
    """Eigenvalues in ascending order."""
    return np.linalg.eigvalsh(_check_hermitian(H))


def dressed_states(H):
    return np.linalg.eigh(_check_hermitian(H))


def propagate(H, psi0, t: float) -> np.ndarray:
    """``exp(-i H t) psi0`` by spectral decomposition."""
    psi0 = np.asarray(psi0, dtype=complex)
    if abs(np.linalg.norm(psi0) - 1.0) > 1e-10:
        raise ValueError("initial state must be normalized")
    vals, vecs = dressed_states(H)
    return vecs @ (np.exp(-1j * vals * t) * (vecs.conj().T @ psi0))


def pair_splitting(H, i: int, j: int) -> float:
    """Splitting of the two eigenstates that carry most of basis states ``i`` and ``j``."""
    vals, vecs = dressed_states(H)
    weight = np.abs(vecs[i, :]) ** 2 + np.abs(vecs[j, :]) ** 2
    a, b = np.argsort(weight)[-2:]
    return float(abs(vals[a] - vals[b]))


def flop_frequency(H, i: int, j: int, guess: float) -> float:
    """Angular frequency of population transfer ``i -> j`` from exact propagation.

    Returns ``pi / t*`` where ``t*`` is the global maximum of ``|<j|psi(t)>|^2``
    in ``[0.5, 1.5] pi / guess``.  The window is scanned on a grid finer than
    the fastest populated oscillation, then the best point is refined.
    """
    from scipy.optimize import minimize_scalar

    vals, vecs = dressed_states(H)
    amp = vecs[j, :] * vecs.conj()[i, :]
    keep = np.abs(amp) > 1e-14
    vals, amp = vals[keep], amp[keep]

    def pop(t):
        return np.abs(np.exp(-1j * np.outer(np.atleast_1d(t), vals)) @ amp) ** 2

    t0 = math.pi / guess
    span = float(vals.max() - vals.min()) if len(vals) > 1 else 0.0
    step = min(t0 / 2000, 2 * math.pi / span / 40) if span > 0 else t0 / 2000
    grid = np.arange(0.5 * t0, 1.5 * t0, step)
    p = np.concatenate([pop(chunk) for chunk in np.array_split(grid, max(1, len(grid) // 4096))])
    k = int(np.argmax(p))
    r = minimize_scalar(lambda t: -pop(t)[0], bounds=(grid[k] - step, grid[k] + step), method="bounded",
                        options={"xatol": 1e-12 * t0})
    return math.pi / r.x


def pv_window_extrapolation(f, pole: float, support, windows=(0.04, 0.02, 0.01)) -> float:
    """Principal value by excluding ``[pole-h, pole+h]`` and extrapolating ``h -> 0``.

    The excluded-window error is odd in the kernel expansion, so it behaves as
    ``c1 h + c3 h^3``; two Richardson steps remove both.
    """
    lo, hi = support

    def cut(h):
        a = integrate.quad(lambda w: f(w) / (w - pole), lo, pole - h, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        b = integrate.quad(lambda w: f(w) / (w - pole), pole + h, hi, limit=400, epsabs=1e-14, epsrel=1e-12)[0]
        return a + b

    h = list(windows)
    v = [cut(x) for x in h]
    # fit c0 + c1 h + c3 h^3 exactly through the three windows
    A = np.array([[1.0, x, x**3] for x in h])
    return float(np.linalg.solve(A, np.array(v))[0])


# -- effective vs exact ----------------------------------------------------


@dataclass
class ComparisonReport:
    observable: str
    exact: float
    effective: float
    abs_error: float
    rel_error: float
    expected_error: float
    truncation: dict
    params: dict = field(default_factory=dict)
    truncation_change: float = 0.0

    @property
    def passed(self) -> bool:
        return self.abs_error <= self.expected_error and self.truncation_ok

    @property
    def truncation_ok(self) -> bool:
        return self.truncation_change <= 0.1 * self.abs_error + 1e-13

    def to_dict(self) -> dict:
        return {
            "observable": self.observable,
            "exact": self.exact,
            "effective": self.effective,
            "abs_error": self.abs_error,
            "rel_error": self.rel_error,
            "expected_error": self.expected_error,
            "truncation": self.truncation,
            "truncation_change": self.truncation_change,
            "params": self.params,
            "passed": self.passed,
        }


def _scales(model: InteractionModel):
    """Largest coupling and smallest off-resonant detuning."""
    g = max((abs(op.g) for op in model.ops), default=0.0)
    ds = [abs(op.delta) for op in model.ops if abs(op.delta) > 1e-12]
    d = min(ds) if ds else 1.0
    return g, d


def _trunc_dict(tr: FockTruncation):
    return {"n_max": tr.n_max, "max_total": tr.max_total}


def _obs_dispersive_shift(model, H_eff, trunc, photons=5):
    """Mean per-photon slope of the qubit transition frequency over 0..photons."""
    if len(model.levels) != 2 or len(model.modes) != 1:
        raise ValueError("dispersive_shift needs a two-level, single-mode model")
    lo, hi = sorted(model.levels, key=lambda lv: lv.omega)

    def freqs(H, basis):
        vals, vecs = dressed_states(H)
        out = []
        for n in range(photons + 2):
            e = vals[int(np.argmax(np.abs(vecs[basis.index(hi.id, (n,)), :])))]
            g = vals[int(np.argmax(np.abs(vecs[basis.index(lo.id, (n,)), :])))]
            out.append(e - g)
        return np.array(out)

    def run(tr):
        basis = FockBasis(model, tr)
        fx = freqs(fock_hamiltonian(model, basis), basis)
        fe = freqs(H_eff.matrix(basis), basis)
        return float(np.mean(np.diff(fx)[: photons + 1])), float(np.mean(np.diff(fe)[: photons + 1]))

    return run


def _obs_spectrum(model, H_eff, trunc, cap=1):
    """Largest level mismatch over bare states with at most ``cap`` photons."""

    def run(tr):
        basis = FockBasis(model, tr)
        ex = dressed_spectrum(fock_hamiltonian(model, basis))
        ef = dressed_spectrum(H_eff.matrix(basis))
        keep = [k for k, cfg in enumerate(basis.configs) if sum(cfg) <= cap]
        nc = len(basis.configs)
        diag = np.diag(basis.free_hamiltonian()).real
        idx = [lp * nc + k for lp in range(len(model.levels)) for k in keep]
        lowest = np.sort(diag[idx])
        # effective levels adiabatically connected to the kept bare states
        ef_sel = np.array([ef[np.argmin(np.abs(ef - e0))] for e0 in lowest])
        err = max(float(np.min(np.abs(ex - e))) for e in ef_sel)
        return err, 0.0

    return run


def _obs_pair(model, H_eff, trunc, a, b, method="splitting"):
    def run(tr):
        basis = FockBasis(model, tr)
        i, j = basis.index(*a), basis.index(*b)
        ex = pair_splitting(fock_hamiltonian(model, basis), i, j)
        ef = pair_splitting(H_eff.matrix(basis), i, j)
        return ex, ef

    return run


OBSERVABLES = ("dispersive_shift", "spectrum", "flip_flop")


def default_observables(model: InteractionModel) -> list[str]:
    if len(model.levels) == 2 and len(model.modes) == 1:
        return ["dispersive_shift", "spectrum"]
    names = [lv.name for lv in model.levels]
    if set(names) >= {"e1,g2", "g1,e2"}:
        return ["flip_flop", "spectrum"]
    return ["spectrum"]


def compare_effective_vs_exact(model: InteractionModel, policy=None, observables=None, order: int = 1,
                               trunc: FockTruncation | None = None, H_eff=None) -> list[ComparisonReport]:
    """Compare effective and exact values of named observables.

    The ``spectrum`` observable has no single exact value; its report holds the
    largest level mismatch in ``abs_error`` and that mismatch over the smallest
    detuning in ``rel_error``.  ``expected_error`` is the dispersive estimate ``|delta| (g/delta)^k`` with
    ``k`` the odd integer among ``order + 1, order + 2``, scaled by the largest
    photon number probed; each exact value is recomputed
    with four more photons per mode to expose truncation artifacts.
    """
    from .elimination import EliminationPolicy, assemble_effective

    policy = policy or EliminationPolicy()
    if H_eff is None:
        H_eff = assemble_effective(model, order, policy)
    observables = list(observables or default_observables(model))
    g, d = _scales(model)
    k = order + 2 if order % 2 else order + 1
    reports = []
    for name in observables:
        if name == "dispersive_shift":
            photons = 5
            tr = trunc or FockTruncation(photons + 3)
            run = _obs_dispersive_shift(model, H_eff, tr, photons)
            expected = 2 * d * (g / d) ** k * (photons + 2) if g else 0.0
        elif name == "spectrum":
            tr = trunc or FockTruncation(3)
            run = _obs_spectrum(model, H_eff, tr)
            expected = 4 * d * (g / d) ** k if g else 0.0
        elif name == "flip_flop":
            lv = {l.name: l.id for l in model.levels}
            vac = (0,) * len(model.modes)
            tr = trunc or FockTruncation(2)
            run = _obs_pair(model, H_eff, tr, (lv["e1,g2"], vac), (lv["g1,e2"], vac))
            expected = 4 * d * (g / d) ** k if g else 0.0
        else:
            raise ValueError(f"unknown observable {name!r}; choose from {', '.join(OBSERVABLES)}")
        ex, ef = run(tr)
        ex_wide, _ = run(tr.widened(4))
        if name == "spectrum":
            err, ex, ef = ex, 0.0, 0.0
            change = abs(ex_wide - err)
        else:
            err = abs(ex - ef)
            change = abs(ex_wide - ex)
        if name == "spectrum":
            rel = err / d if d else 0.0
        else:
            rel = err / abs(ex) if ex else (0.0 if err == 0 else math.inf)
        reports.append(ComparisonReport(
            observable=name, exact=float(ex), effective=float(ef), abs_error=float(err),
            rel_error=float(rel), expected_error=float(expected), truncation=_trunc_dict(tr),
            params={"model": model.name, "order": order, "T": policy.T, "kappa": policy.kappa,
                    "g_max": g, "delta_min": d},
            truncation_change=float(change),
        ))
    return reports
