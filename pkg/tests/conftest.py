import numpy as np
import pytest

from depkit.probability import dsbs, product_distribution, validate_joint


@pytest.fixture
def J_dsbs():
    return dsbs(0.5)


@pytest.fixture
def J_product():
    return product_distribution([0.2, 0.3, 0.5], [0.6, 0.4])


@pytest.fixture
def J_duprow():
    m = np.array([[0.2, 0.05], [0.2, 0.05], [0.1, 0.4]])
    return validate_joint(m / m.sum(), ["x1", "x2", "x3"], ["y1", "y2"])


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


ACCEPTANCE_LINES = []


@pytest.fixture
def acceptance():
    """Record one PASS/FAIL line per acceptance criterion; returns the verdict."""

    def record(n, title, ok, detail, elapsed, limit):
        verdict = bool(ok) and (limit is None or elapsed < limit)
        bound = "no limit" if limit is None else f"limit {limit}s"
        line = f"{'PASS' if verdict else 'FAIL'} C{n:<2} {title}: {detail} [{elapsed:.1f}s, {bound}]"
        ACCEPTANCE_LINES.append(line)
        print(line)
        return verdict

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1][1:])):
            terminalreporter.write_line(line)
