import os
import sys

import pytest

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.join(HERE, "fixtures")
GOLDEN = os.path.join(HERE, "golden")

sys.path.insert(0, HERE)


def fixture_path(name: str) -> str:
    return os.path.join(FIXTURES, name)


def read_fixture(name: str) -> str:
    with open(fixture_path(name), encoding="utf-8") as fh:
        return fh.read()


@pytest.fixture(scope="session")
def onlinestore():
    from sessadapt.frontend import parse_protocol
    return parse_protocol(read_fixture("onlinestore.mpst")).protocol("OnlineStore")


@pytest.fixture(scope="session")
def store_program():
    from sessadapt.frontend import parse_program_file
    return parse_program_file(fixture_path("onlinestore.act"))


@pytest.fixture(scope="session")
def dns_program():
    from sessadapt.frontend import parse_program_file
    return parse_program_file(fixture_path("dns.act"))


CRITERIA: dict[int, tuple[bool, str]] = {}


def record_criterion(number: int, ok: bool, summary: str) -> None:
    CRITERIA[number] = (ok, summary)
    print(f"{'PASS' if ok else 'FAIL'} criterion {number}: {summary}")


def pytest_terminal_summary(terminalreporter):
    if not CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        ok, summary = CRITERIA[n]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {n}: {summary}")
