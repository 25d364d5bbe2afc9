import numpy as np
import pytest

from port_synth.hinf import model_match
from port_synth.poly_rational import RationalFunction, default_grid
from port_synth.synthesis import (
    REFERENCE_BOUND,
    CircuitParams,
    build_T1_T2,
    compensator,
    sweep_perturbations,
    verify_robust,
)


ACCEPTANCE_LINES: list[str] = []


def report(criterion, ok: bool, detail: str) -> bool:
    """Record and print one acceptance line."""
    line = f"{'PASS' if ok else 'FAIL'} criterion {criterion}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def zpk(zeros, poles, k):
    return RationalFunction.from_zpk(zeros, poles, k)


def match_roots(expected, got, rtol):
    """Largest relative distance from each expected root to its greedy partner in ``got``."""
    got = list(np.asarray(got, dtype=complex))
    worst = 0.0
    for e in expected:
        if not got:
            return np.inf
        d = [abs(g - e) / max(abs(e), 1e-12) for g in got]
        k = int(np.argmin(d))
        worst = max(worst, d[k])
        got.pop(k)
    return worst


@pytest.fixture(scope="session")
def grid():
    return default_grid()


@pytest.fixture(scope="session")
def nominal():
    return CircuitParams()


@pytest.fixture(scope="session")
def sweep(nominal, grid):
    return sweep_perturbations(nominal, 5.0, grid, workers=1)


@pytest.fixture(scope="session")
def fraction(sweep):
    return sweep.nominal


@pytest.fixture(scope="session")
def T1T2(fraction):
    return build_T1_T2(REFERENCE_BOUND, fraction)


@pytest.fixture(scope="session")
def match(T1T2, grid):
    T1, T2 = T1T2
    return model_match(T1, T2, 0.05, grid)


@pytest.fixture(scope="session")
def Zc(fraction, match):
    return compensator(fraction, match.Q)


@pytest.fixture(scope="session")
def verdicts(Zc, nominal):
    return verify_robust(Zc, nominal, 5.0, workers=1)
