import numpy as np
import pytest

from magnuspulse.algebra import build_basis


@pytest.fixture(scope="session")
def pauli():
    return build_basis("pauli_su2")


@pytest.fixture(scope="session")
def gellmann():
    return build_basis("gellmann3")


def random_su2_hamiltonian(rng, scale, n_harm=3):
    """Smooth random coefficient function ``t -> (3,)`` with sup norm about ``scale``."""
    amp = rng.normal(size=(3, n_harm))
    freq = rng.uniform(0.2, 3.0, size=n_harm)
    phase = rng.uniform(0, 2 * np.pi, size=(3, n_harm))
    amp *= scale / np.abs(amp).sum(axis=1, keepdims=True)

    def h(t):
        return np.sum(amp * np.cos(freq * t + phase), axis=1)

    return h


# one line per acceptance criterion, printed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
