"""Collects acceptance verdicts and prints them once at the end of the run."""

from __future__ import annotations

import pytest

_VERDICTS: dict[int, tuple[str, bool, list[str]]] = {}


class Criterion:
    """Sub-checks of one acceptance criterion; every sub-check runs before the verdict."""

    def __init__(self, number: int, title: str):
        self.number = number
        self.title = title
        self.lines: list[str] = []
        self.ok = True

    def check(self, name: str, ok: bool, detail: str = "") -> bool:
        ok = bool(ok)
        self.ok &= ok
        self.lines.append(f"    [{'ok' if ok else 'FAIL'}] {name}" + (f": {detail}" if detail else ""))
        return ok

    def finish(self) -> None:
        _VERDICTS[self.number] = (self.title, self.ok, self.lines)
        print(self.headline())
        print("\n".join(self.lines))
        assert self.ok, self.headline() + "\n" + "\n".join(self.lines)

    def headline(self) -> str:
        return f"criterion {self.number} ({self.title}): {'PASS' if self.ok else 'FAIL'}"


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not _VERDICTS:
        return
    tr = terminalreporter
    tr.write_sep("=", "acceptance criteria")
    for n in range(1, 11):
        if n not in _VERDICTS:
            tr.write_line(f"criterion {n}: NOT RUN")
            continue
        title, ok, lines = _VERDICTS[n]
        tr.write_line(f"criterion {n} ({title}): {'PASS' if ok else 'FAIL'}")
        for line in lines:
            tr.write_line(line)
