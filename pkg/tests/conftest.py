import numpy as np
import pytest

from fidbounds.randgen import StateSpec, make_state, random_spec, rng_for


def random_pair(n, seed, kinds=("haar", "induced", "rank")):
    rng = rng_for(seed, n)
    return (make_state(random_spec(n, rng, kinds)).data,
            make_state(random_spec(n, rng, kinds)).data)


def induced(n, seed, k=None):
    return make_state(StateSpec(n, "induced", seed, K=n if k is None else k)).data


def pure(n, seed):
    return make_state(StateSpec(n, "haar", seed)).data


def ket_projector(psi):
    psi = np.asarray(psi, dtype=complex)
    psi = psi / np.linalg.norm(psi)
    return np.outer(psi, psi.conj())


@pytest.fixture
def qubit_pair():
    return random_pair(2, 123)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one pass/fail line per acceptance criterion."""
    def record(number, ok, detail):
        line = f"{'PASS' if ok else 'FAIL'} criterion {number}: {detail}"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
