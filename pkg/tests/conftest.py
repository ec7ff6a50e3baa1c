import pytest

from riesz_balayage import KernelSpec, PointCharge, SetSpec, discretize


@pytest.fixture(scope="session")
def newton():
    return KernelSpec(2.0, 3)


@pytest.fixture(scope="session")
def sphere200():
    return discretize(SetSpec.sphere([0, 0, 0], 1.0), 200)


@pytest.fixture(scope="session")
def charge_z2():
    return [PointCharge((0.0, 0.0, 2.0), 1.0)]


def pytest_terminal_summary(terminalreporter):
    lines = []
    for key in ("passed", "failed"):
        for rep in terminalreporter.stats.get(key, []):
            if rep.when != "call":
                continue
            for name, value in getattr(rep, "user_properties", []):
                if name == "criterion":
                    lines.append(value)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
