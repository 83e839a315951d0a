import dataclasses
import sys

import pytest

from jlmdiag import TransitionString, build_preset
from jlmdiag.model import BosonMode, InteractionModel, MatterLevel, ZerothOp


def with_theta(model, theta):
    """Copy of ``model`` with every regulator set to ``theta``."""
    return dataclasses.replace(model, ops=tuple(dataclasses.replace(op, theta=theta) for op in model.ops))


def chain_model(deltas, thetas=None, g=0.05):
    """Ladder of len(deltas)+1 levels, one mode per rung, with the given detunings."""
    n = len(deltas)
    levels, modes, ops = [], [], []
    E = 0.0
    levels.append(MatterLevel(0, "l0", 0.0))
    for k, d in enumerate(deltas):
        w = 3.0 + k
        E = E + w - d
        levels.append(MatterLevel(k + 1, f"l{k + 1}", E))
        modes.append(BosonMode(f"m{k}", w))
        th = None if thetas is None else thetas[k]
        ops.append(ZerothOp(k, k + 1, k, False, g, th))
        ops.append(ZerothOp(k + 1, k, k, True, g, th))
    m = InteractionModel(tuple(levels), tuple(modes), tuple(ops))
    s = TransitionString(tuple(2 * k for k in range(n)), m)
    return m, s


@pytest.fixture
def jc():
    return build_preset("jc")


@pytest.fixture
def rabi():
    return build_preset("rabi")


@pytest.fixture
def tc():
    return build_preset("tavis_cummings")


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(results):
        terminalreporter.write_line(results[key])
