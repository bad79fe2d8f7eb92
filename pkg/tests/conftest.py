import pytest

from thermocage import StackGeometry, build_network

ACCEPTANCE = {}


@pytest.fixture(scope="session")
def stack_geom():
    return StackGeometry(4, 4, 8)


@pytest.fixture(scope="session")
def stack_net(stack_geom):
    return build_network(stack_geom)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: int(k.split()[0][2:])):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {key}: {detail}")
