import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from megc.latency import Action  # noqa: E402
from megc.system import SystemParams  # noqa: E402


def random_action(rng, low=0.0):
    """A feasible action with every share at least ``low``."""
    a_off, a_back, beta, lam = low + (1 - 2 * low) * rng.uniform(size=4)
    w = rng.exponential(size=3)
    w = low + (1 - 3 * low) * w / w.sum()
    return Action(a_off, 1 - a_off, a_back, 1 - a_back, beta, lam, w[0], w[1], w[2])


def reference_inputs(params: SystemParams, action: Action, channel, tasks):
    p = {"b_off": params.b_off, "b_back": params.b_back, "p_comp": params.p_comp,
         "p_ve": params.p_ve, "P": params.p_es, "n0": params.n0, "f_comp": params.f_comp,
         "f_es": params.f_es, "chi": params.chi, "xi": params.xi, "zeta": params.zeta,
         "psi": params.psi}
    a = {name: float(getattr(action, name)) for name in (
        "alpha_comp_off", "alpha_ve_off", "alpha_aigc_back", "alpha_ve_back", "beta", "lam",
        "omega_comp", "omega_aigc", "omega_ve")}
    h = {"comp_off": channel.h_comp_off, "ve_off": channel.h_ve_off,
         "aigc_back": channel.h_aigc_back, "ve_back": channel.h_ve_back}
    d = {"comp": tasks.d_comp, "ve": tasks.d_ve, "aigc_out": tasks.d_aigc_out}
    return p, a, h, d


@pytest.fixture
def params():
    return SystemParams()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion ")[1].split(":")[0])):
            terminalreporter.write_line(line)
