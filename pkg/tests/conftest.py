import pytest

from pbmarkov import build_model, compute_metrics, table1_config

ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def t1_config():
    return table1_config()


@pytest.fixture(scope="session")
def t1_model(t1_config):
    return build_model(t1_config)


@pytest.fixture(scope="session")
def t1_report(t1_model):
    return compute_metrics(t1_model)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)
