from __future__ import annotations

import pytest

_CRITERIA = pytest.StashKey[dict]()


@pytest.fixture(autouse=True)
def _isolated_cache(tmp_path, monkeypatch):
    # never touch the user's cache from the test suite
    monkeypatch.setenv("ITELAB_CACHE_DIR", str(tmp_path / "eigencache"))


@pytest.fixture
def criterion(request):
    """Record ``criterion(number, ok, detail)``; AND-ed over calls."""
    store = request.config.stash.setdefault(_CRITERIA, {})

    def record(number: int, ok: bool, detail: str = "") -> bool:
        prev_ok, prev_detail = store.get(number, (True, ""))
        joined = "; ".join(x for x in (prev_detail, detail) if x)
        store[number] = (prev_ok and bool(ok), joined)
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    store = config.stash.get(_CRITERIA, {})
    if not store:
        return
    terminalreporter.section("acceptance criteria")
    for number in range(1, 11):
        if number not in store:
            terminalreporter.write_line(f"criterion {number:2d}: NOT RUN")
            continue
        ok, detail = store[number]
        terminalreporter.write_line(f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
