"""Truncated Fock bases and matrix representations of operators."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

__all__ = ["FockTruncation", "FockBasis", "TruncationError"]


class TruncationError(ValueError):
    pass


@dataclass(frozen=True)
class FockTruncation:
    """Photon cutoff per mode, with an optional cap on the total photon number.

    Basis order: matter level (model order) is the slowest index; photon
    configurations follow in lexicographic order of occupation tuples.
    """

    n_max: int | tuple[int, ...] = 4
    max_total: int | None = None
    budget: int = 20000

    def cutoffs(self, n_modes: int) -> tuple[int, ...]:
        if isinstance(self.n_max, int):
            return (self.n_max,) * n_modes
        if len(self.n_max) != n_modes:
            raise ValueError("n_max needs one entry per mode")
        return tuple(self.n_max)

    def widened(self, extra: int) -> "FockTruncation":
        if isinstance(self.n_max, int):
            n_max = self.n_max + extra
        else:
            n_max = tuple(n + extra for n in self.n_max)
        total = None if self.max_total is None else self.max_total + extra
        return FockTruncation(n_max, total, self.budget)


class FockBasis:
    def __init__(self, model, trunc: FockTruncation):
        self.model = model
        self.trunc = trunc
        cut = trunc.cutoffs(len(model.modes))
        configs = self._configs(cut, trunc.max_total)
        dim = len(model.levels) * len(configs)
        if dim > trunc.budget:
            raise TruncationError(f"Fock dimension {dim} exceeds budget {trunc.budget}")
        self.cutoffs = cut
        self.configs = configs
        self.config_index = {c: i for i, c in enumerate(configs)}
        self.level_ids = [lv.id for lv in model.levels]
        self.level_pos = {lid: i for i, lid in enumerate(self.level_ids)}
        self.dim = dim

    @staticmethod
    def _configs(cut, max_total):
        if max_total is None:
            return list(itertools.product(*[range(c + 1) for c in cut]))
        out = []

        def rec(prefix, k, left):
            if k == len(cut):
                out.append(tuple(prefix))
                return
            for n in range(min(cut[k], left) + 1):
                prefix.append(n)
                rec(prefix, k + 1, left - n)
                prefix.pop()

        rec([], 0, max_total)
        return out

    def index(self, level_id: int, config) -> int:
        return self.level_pos[level_id] * len(self.configs) + self.config_index[tuple(config)]

    def state(self, level_id: int, config=None) -> np.ndarray:
        if config is None:
            config = (0,) * len(self.model.modes)
        v = np.zeros(self.dim, dtype=complex)
        v[self.index(level_id, config)] = 1.0
        return v

    def monomial_action(self, monomial, config):
        """Apply a normal-ordered monomial; return (amplitude, new config) or None."""
        occ = list(config)
        amp = 1.0
        for mode, p, q in monomial:
            n = occ[mode]
            if q > n:
                return None
            amp *= math.sqrt(math.prod(range(n - q + 1, n + 1)))
            n -= q
            amp *= math.sqrt(math.prod(range(n + 1, n + p + 1)))
            n += p
            occ[mode] = n
        new = tuple(occ)
        if new not in self.config_index:
            return None
        return amp, new

    def operator(self, to_level: int, from_level: int, monomial) -> np.ndarray:
        """Matrix of ``|to><from| (x) monomial`` projected on the truncated space."""
        M = np.zeros((self.dim, self.dim), dtype=complex)
        self.add_operator(M, 1.0, to_level, from_level, monomial)
        return M

    def add_operator(self, M, coeff, to_level, from_level, monomial):
        nc = len(self.configs)
        r0 = self.level_pos[to_level] * nc
        c0 = self.level_pos[from_level] * nc
        for j, cfg in enumerate(self.configs):
            res = self.monomial_action(monomial, cfg)
            if res is None:
                continue
            amp, new = res
            M[r0 + self.config_index[new], c0 + j] += coeff * amp
        return M

    def free_hamiltonian(self) -> np.ndarray:
        diag = []
        w = np.array([m.omega for m in self.model.modes])
        for lv in self.model.levels:
            for cfg in self.configs:
                diag.append(lv.omega + float(np.dot(w, cfg)) if len(cfg) else lv.omega)
        return np.diag(np.array(diag, dtype=complex))

    def number_operator(self) -> np.ndarray:
        tot = [sum(cfg) for _ in self.model.levels for cfg in self.configs]
        return np.diag(np.array(tot, dtype=float))
