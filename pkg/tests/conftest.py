import itertools

import pytest

from spectrum_auction.graph import ConflictStructure, Ordering, RhoProvenance

# (criterion, passed, detail) rows collected by the acceptance suite
ACCEPTANCE_RESULTS: list[tuple[str, bool, str]] = []


def record(name: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE_RESULTS.append((name, passed, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for name, passed, detail in ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")


def triangle() -> ConflictStructure:
    return ConflictStructure.unweighted(3, [(0, 1), (1, 2), (0, 2)])


def clique(n: int) -> ConflictStructure:
    return ConflictStructure.unweighted(n, itertools.combinations(range(n), 2))


def order(*perm, rho=0) -> Ordering:
    return Ordering(tuple(perm), rho, RhoProvenance.HEURISTIC)


@pytest.fixture
def tri():
    return triangle()
