import pytest

from shardswap.amm import FeePolicy, Pool
from shardswap.fixed import to_units

CRITERIA: dict[int, str] = {}
_outcomes: dict[int, list[bool]] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n, text): acceptance criterion exercised by this test")


def pytest_collection_modifyitems(items):
    for item in items:
        m = item.get_closest_marker("criterion")
        if m:
            CRITERIA.setdefault(m.args[0], m.args[1])


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            _outcomes.setdefault(value, []).append(report.passed)


@pytest.fixture(autouse=True)
def _tag_criterion(request):
    m = request.node.get_closest_marker("criterion")
    if m:
        request.node.user_properties.append(("criterion", m.args[0]))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(CRITERIA):
        results = _outcomes.get(n)
        if results is None:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n}: {status}  {CRITERIA[n]}")


def u(x) -> int:
    return to_units(str(x))


def make_pool(x="100", y="10", pair=("A", "B"), shard="1", gamma="1") -> Pool:
    return Pool(pair, (u(x), u(y)), shard=shard, fee=FeePolicy(u(gamma)))
