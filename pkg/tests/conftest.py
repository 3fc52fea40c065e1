import shutil
import sys
from collections import defaultdict
from pathlib import Path

import pytest

TESTS = Path(__file__).parent
DATA = TESTS / "data"
sys.path.insert(0, str(TESTS))

CRITERIA = {
    1: "indicator oracle equivalence",
    2: "WMA closed form",
    3: "signal brute-force equivalence",
    4: "portfolio conservation",
    5: "worked accounting example",
    6: "Monte Carlo shock law",
    7: "qualitative sweep reproduction",
    8: "fixture backtest oracle",
    9: "provenance integrity",
    10: "DSL fidelity",
    11: "determinism",
}

_outcomes: dict[int, list[str]] = defaultdict(list)


@pytest.fixture
def data_dir() -> Path:
    return DATA


@pytest.fixture
def cache_dir(tmp_path) -> Path:
    """A private copy of the fixture price cache."""
    dst = tmp_path / "cache"
    shutil.copytree(DATA / "cache", dst)
    return dst


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    marker = item.get_closest_marker("acceptance")
    if marker is None:
        return
    n = marker.args[0]
    if rep.when == "call":
        # an xfail is a failed criterion; an unexpected pass is a pass
        _outcomes[n].append("pass" if rep.passed else "fail")
    elif rep.failed:
        _outcomes[n].append("fail")


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    terminalreporter.section("acceptance criteria")
    for n, title in CRITERIA.items():
        got = _outcomes.get(n)
        if not got:
            continue
        verdict = "PASS" if all(o == "pass" for o in got) else "FAIL"
        terminalreporter.write_line(f"ACCEPTANCE criterion {n:2d} ({title}): {verdict}")
