import pytest
from hypothesis import settings

from lctcq.quant_kernel import Block
from lctcq.rate_estimator import RateModelParams

settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")


@pytest.fixture
def linear_params():
    return RateModelParams(alpha=1.0, beta=1.0, gamma=0.5, epsilon=2.0)


def block_1d(values):
    return Block.from_scan(values, 1, len(values))


_CRITERIA = {}


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m is not None:
            _CRITERIA.setdefault(m.args[0], {"text": m.args[1], "outcomes": {}})


def pytest_runtest_logreport(report):
    if report.when == "teardown" and report.outcome == "passed":
        return
    for key, value in report.user_properties:
        if key == "criterion" and value in _CRITERIA:
            outcomes = _CRITERIA[value]["outcomes"]
            if report.failed or report.nodeid not in outcomes:
                outcomes[report.nodeid] = report.outcome


def pytest_runtest_setup(item):
    m = item.get_closest_marker("criterion")
    if m is not None:
        item.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_CRITERIA, key=lambda c: (int("".join(ch for ch in c if ch.isdigit())), c)):
        entry = _CRITERIA[cid]
        outcomes = set(entry["outcomes"].values())
        if not outcomes:
            status = "NOT RUN"
        elif outcomes == {"passed"}:
            status = "PASS"
        elif "failed" in outcomes:
            status = "FAIL"
        else:
            status = "SKIP"
        tr.write_line(f"{status:7s} criterion {cid}: {entry['text']}")
