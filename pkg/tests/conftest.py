from __future__ import annotations

import sys
from pathlib import Path

import pytest
from hypothesis import HealthCheck, settings

sys.path.insert(0, str(Path(__file__).parent))

settings.register_profile(
    "default",
    deadline=None,
    max_examples=40,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_VERDICTS: dict[int, list[tuple[str, bool, str]]] = {}


@pytest.fixture
def verdict():
    """Record one leg of an acceptance criterion; returns ``ok`` for chaining into an assert."""

    def record(criterion: int, leg: str, ok: bool, detail: str = "") -> bool:
        _VERDICTS.setdefault(criterion, []).append((leg, bool(ok), detail))
        print(f"criterion {criterion} [{leg}]: {'PASS' if ok else 'FAIL'} {detail}".rstrip())
        return bool(ok)

    return record


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion in sorted(_VERDICTS):
        legs = _VERDICTS[criterion]
        ok = all(passed for _, passed, _ in legs)
        failed = [f"{leg} ({detail})" if detail else leg for leg, passed, detail in legs if not passed]
        tail = f" failing: {'; '.join(failed)}" if failed else f" ({len(legs)} checks)"
        terminalreporter.write_line(f"criterion {criterion}: {'PASS' if ok else 'FAIL'}{tail}")
