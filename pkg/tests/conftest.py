import numpy as np
import pytest

from sphdesign.design import compute_design
from sphdesign.framelet import QuadratureChain
from sphdesign.pointsets import spiral


@pytest.fixture(scope="session")
def small_designs():
    """Spiral-start designs for t = 4, 8, 16 (N = (t+1)^2)."""
    return {t: compute_design(spiral((t + 1) ** 2), t).points for t in (4, 8, 16)}


@pytest.fixture(scope="session")
def small_chain(small_designs):
    return QuadratureChain([small_designs[t] for t in (4, 8, 16)], [4, 8, 16])


@pytest.fixture(scope="session")
def shipped_chain():
    from sphdesign.io import standard_chain

    return standard_chain(check=False)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def acceptance(request):
    """Collects one PASS/FAIL line per acceptance criterion for the terminal summary."""
    lines = getattr(request.config, "_acceptance_lines", None)
    if lines is None:
        lines = request.config._acceptance_lines = []

    def record(n, ok, detail):
        line = f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((n, line))
        print(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter, config):
    lines = getattr(config, "_acceptance_lines", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
