import numpy as np
import pytest

from weakcumulants.engine import Experiment, PointerConfig
from weakcumulants.pointer import PointerGrid
from weakcumulants.scenarios import pointer_family

GRID128 = PointerGrid(-12.0, 12.0, 128)
GRID64 = PointerGrid(-12.0, 12.0, 64)


def make_experiment(chain, families, r="q", s="p", g=0.01, grid=GRID128):
    """One pointer per observable; ``families``/``r``/``s`` may be scalars or per-pointer lists."""
    n = chain.n
    fams = [families] * n if isinstance(families, str) else list(families)
    rs = [r] * n if isinstance(r, str) else list(r)
    ss = [s] * n if isinstance(s, str) else list(s)
    gs = [g] * n if np.isscalar(g) else list(g)
    pointers = []
    for fam, rk, sk, gk in zip(fams, rs, ss, gs):
        if isinstance(fam, tuple):
            phi = pointer_family(fam[0], grid, **fam[1])
        else:
            phi = pointer_family(fam, grid)
        pointers.append(PointerConfig(phi, sk, rk, gk))
    return Experiment(chain, pointers)


@pytest.fixture
def grid128():
    return GRID128


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# criterion number -> PASS/FAIL line, filled by test_acceptance
ACCEPTANCE_RESULTS: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_RESULTS:
        terminalreporter.section("acceptance criteria")
        for number in sorted(ACCEPTANCE_RESULTS):
            terminalreporter.write_line(ACCEPTANCE_RESULTS[number])
