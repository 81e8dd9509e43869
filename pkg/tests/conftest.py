import pytest

from veriblock.contracts import Incident, Network, Review, Verdict
from veriblock.evidence import Position
from veriblock.ledger import Ledger


def make_incident(x=0.0, y=0.0, heading=90.0, t=0, incident_id=1, provider="car-A"):
    return Incident(incident_id, provider, Position(x, y), heading, t, "Accident")


def make_review(x=0.0, y=0.0, heading=90.0, t=0, positive=True, review_id=1, reviewer="car-B",
                incident_id=1):
    verdict = Verdict.POSITIVE if positive else Verdict.NEGATIVE
    return Review(review_id, reviewer, incident_id, verdict, Position(x, y), heading, t)


@pytest.fixture
def ledger():
    return Ledger(block_interval=None)


@pytest.fixture
def network():
    return Network(Ledger(block_interval=None))


def pytest_terminal_summary(terminalreporter):
    reports = [
        r
        for r in terminalreporter.getreports("passed") + terminalreporter.getreports("failed")
        if "test_acceptance.py" in r.nodeid and r.when == "call"
    ]
    if not reports:
        return
    terminalreporter.section("acceptance criteria")
    for r in sorted(reports, key=lambda r: r.nodeid):
        name = r.nodeid.split("::")[-1]
        terminalreporter.write_line(f"{'PASS' if r.passed else 'FAIL'}  {name}")
