import pytest

from covest import states

# criterion label -> list of outcomes, filled by the acceptance tests
ACCEPTANCE_RESULTS: dict[str, list[bool]] = {}


@pytest.fixture(scope="session")
def gaussian():
    return states.make_state("gaussian", [1.0])


@pytest.fixture(scope="session")
def gaussian2():
    return states.make_state("gaussian", [2.0])


@pytest.fixture(scope="session")
def mixture_raw():
    return states.make_state("mixture", [-1.0, 2.0, 0.5])


@pytest.fixture(scope="session")
def mixture(mixture_raw):
    return states.center(mixture_raw)


@pytest.fixture(scope="session")
def skewed_mixture():
    return states.center(states.make_state("mixture", [-1.0, 2.0, 0.3]))


@pytest.fixture(scope="session")
def sinc():
    return states.make_state("sinc", [1.0])


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    for marker in report.keywords:
        if marker.startswith("criterion_"):
            label = marker.removeprefix("criterion_")
            ACCEPTANCE_RESULTS.setdefault(label, []).append(report.passed)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label in sorted(ACCEPTANCE_RESULTS, key=int):
        status = "PASS" if all(ACCEPTANCE_RESULTS[label]) else "FAIL"
        terminalreporter.write_line(f"criterion {label:>2}: {status}")
