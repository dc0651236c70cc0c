from collections import OrderedDict

# criterion id -> list of (clause, passed, detail); filled by test_acceptance.py
ACCEPTANCE: "OrderedDict[str, list[tuple[str, bool, str]]]" = OrderedDict()


def record(criterion: str, clause: str, passed: bool, detail: str = "") -> None:
    ACCEPTANCE.setdefault(criterion, []).append((clause, bool(passed), detail))
    print(f"{criterion} [{clause}] {'PASS' if passed else 'FAIL'} {detail}")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for crit, clauses in ACCEPTANCE.items():
        ok = all(p for _, p, _ in clauses)
        failed = [c for c, p, _ in clauses if not p]
        detail = "; ".join(f"{c}: {d}" for c, _, d in clauses if d)
        suffix = f" (failed: {', '.join(failed)})" if failed else ""
        terminalreporter.write_line(f"{crit}: {'PASS' if ok else 'FAIL'}{suffix} | {detail}")
