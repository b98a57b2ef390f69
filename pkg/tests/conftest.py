import numpy as np
import pytest

from flatwalk.circuit import Architecture

_ACCEPTANCE: list[str] = []


def random_architecture(rng: np.random.Generator, n: int, q: int, m: int) -> Architecture:
    """Random admissible architecture with exactly ``m`` gates.

    The first gates pair up a shuffled site list so every site is covered;
    the rest are uniform random pairs. Gates are packed greedily into layers
    in draw order.
    """
    cover = -(-n // 2)
    if m < cover:
        raise ValueError(f"m={m} too small to cover n={n} sites")
    order = [int(s) for s in rng.permutation(n)]
    if n % 2:
        order.append(int(rng.choice([s for s in range(n) if s != order[-1]])))
    gates = [(order[2 * i], order[2 * i + 1]) for i in range(cover)]
    while len(gates) < m:
        a, b = rng.choice(n, size=2, replace=False)
        gates.append((int(a), int(b)))
    layers: list[list[tuple[int, int]]] = []
    busy: set[int] = set()
    for a, b in gates:
        if not layers or a in busy or b in busy:
            layers.append([])
            busy = set()
        layers[-1].append((a, b))
        busy.update((a, b))
    return Architecture(n=n, q=q, layers=layers)


@pytest.fixture
def single_gate():
    return Architecture(n=2, q=2, layers=[[(0, 1)]])


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE:
            terminalreporter.write_line(line)
