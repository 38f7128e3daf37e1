import os

import pytest
from hypothesis import settings

from ideallimits.sequences import make_sequence

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# criterion number -> list of (check name, passed, detail)
ACCEPTANCE = {}


@pytest.fixture(scope="session")
def cache_dir(tmp_path_factory):
    return str(tmp_path_factory.mktemp("sieve-cache"))


@pytest.fixture(scope="session")
def lpf_1e6(cache_dir):
    return make_sequence("lpf", 10**6, cache_dir=cache_dir)


@pytest.fixture
def record():
    def _record(criterion: int, check: str, passed: bool, detail: str = ""):
        ACCEPTANCE.setdefault(criterion, []).append((check, bool(passed), detail))
        return passed

    return _record


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        checks = ACCEPTANCE[n]
        ok = all(p for _, p, _ in checks)
        failed = [f"{c} ({d})" for c, p, d in checks if not p]
        note = "; ".join(failed) if failed else f"{len(checks)} checks"
        tr.write_line(f"criterion {n:>2}: {'PASS' if ok else 'FAIL'}  {note}")
