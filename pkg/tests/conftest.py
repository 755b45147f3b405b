import shutil
import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from newsregime import fixture_dir  # noqa: E402


@pytest.fixture
def rng():
    return np.random.default_rng(20240501)


@pytest.fixture
def fixture_copy(tmp_path):
    """Private copy of the bundled synthetic fixture set."""
    dst = tmp_path / "fixtures"
    shutil.copytree(str(fixture_dir()), dst)
    return dst


_criteria: list[tuple[str, str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("acceptance")
    if mark is None or not mark.args:
        return
    if rep.when == "call" or (rep.when == "setup" and rep.failed):
        detail = getattr(item, "criterion_detail", "")
        _criteria.append((mark.args[0], "PASS" if rep.passed else "FAIL", detail))


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(_criteria, key=lambda c: int(c[0].split(".")[0])):
        terminalreporter.write_line(f"[{status}] {name}" + (f"  ({detail})" if detail else ""))
