import pytest

from condwalk.harmonic import build_table
from condwalk.increments import load_law
from condwalk.predict import PredictorInputs


@pytest.fixture(scope="session")
def ssrw():
    return load_law("ssrw")


@pytest.fixture(scope="session")
def trinomial():
    return load_law("trinomial")


@pytest.fixture(scope="session")
def skipfree():
    return load_law("skipfree")


@pytest.fixture(scope="session")
def uniform():
    return load_law("uniform")


def _inputs(law, xmax):
    return PredictorInputs.from_tables(law, build_table(law, xmax, "forward"), build_table(law, xmax, "reversed"))


@pytest.fixture(scope="session")
def ssrw_inputs(ssrw):
    return _inputs(ssrw, 6.0)


@pytest.fixture(scope="session")
def skipfree_inputs(skipfree):
    return _inputs(skipfree, 6.0)


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_log():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split()[1])):
            terminalreporter.write_line(line)
