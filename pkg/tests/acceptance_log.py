"""Collects one summary line per acceptance criterion for the terminal report."""

LINES: list[str] = []


def record(number: int, ok: bool, title: str, detail: str) -> str:
    line = f"[{'PASS' if ok else 'FAIL'}] criterion {number}: {title} ({detail})"
    LINES.append(line)
    print(line)
    return line
