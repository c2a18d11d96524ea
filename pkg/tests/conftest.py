import pytest

from capagg.polytope import certification

ACCEPTANCE: list[tuple[str, bool, str]] = []


@pytest.fixture(scope="session", autouse=True)
def certify_every_projection():
    """Every projection made by the suite is checked against its optimality certificate."""
    with certification(True) as monitor:
        yield monitor


@pytest.fixture
def acceptance_log():
    def record(name: str, passed: bool, detail: str) -> None:
        ACCEPTANCE.append((name, passed, detail))
        print(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")

    return record


def pytest_terminal_summary(terminalreporter):
    from capagg.polytope import _monitor

    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for name, passed, detail in ACCEPTANCE:
            terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {name}: {detail}")
    terminalreporter.write_line(
        f"projection certificates: {_monitor.calls} calls checked, worst slack {_monitor.worst:.3e}, "
        f"{len(_monitor.failures)} violations"
    )
